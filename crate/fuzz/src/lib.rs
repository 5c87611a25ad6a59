//! Checks driven by the fuzz targets. Each function panics on a violated
//! invariant and returns quietly on rejected input.

use gms_core::{
    build, generate, lp_format, lp_solve, residuals, sample_vertex, validate, FormulationId, FractionalPoint,
    GenerationProfile, Instance, LpStatus,
};

/// Largest instance the model-level checks will build.
const MAX_CELLS: usize = 400;

/// Parses an instance, then validates it, round-trips it and builds every
/// formulation when it is valid and small.
pub fn check_instance_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(instance) = Instance::from_json_str(text) else { return };
    if !validate(&instance).is_empty() {
        return;
    }
    let again = Instance::from_json_str(&instance.to_json_string()).expect("serialized instance parses");
    assert_eq!(again.to_json_string(), instance.to_json_string());
    if instance.horizon * instance.tasks.len() > MAX_CELLS {
        return;
    }
    for id in FormulationId::ALL {
        let model = build(id, &instance).expect("valid instance builds");
        model.check().expect("built model is well formed");
        let text = lp_format::to_lp_string(&model);
        assert!(text.trim_end().ends_with("End"));
    }
}

/// Parses a point and evaluates it against every formulation of a fixed instance.
pub fn check_point_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(point) = serde_json::from_str::<FractionalPoint>(text) else { return };
    let instance = Instance::single_task(2, &[3.0, 1.0, 2.0, 5.0]);
    for id in FormulationId::ALL {
        let model = build(id, &instance).expect("fixed instance builds");
        let report = residuals(&model, &point);
        assert!(report.max_violation() >= 0.0 || report.max_violation().is_nan());
    }
}

/// Generates an instance from the input bytes, solves every relaxation and
/// checks the returned points against their rows.
pub fn check_solve_generated(data: &[u8]) {
    let [a, b, c, rest @ ..] = data else { return };
    let seed = rest.iter().fold(0u64, |h, &x| h.rotate_left(8) ^ u64::from(x));
    let horizon = 2 + usize::from(*a) % 14;
    let tasks = 1 + usize::from(*b) % 3;
    let profile = if c % 2 == 0 {
        GenerationProfile::coupled()
    } else {
        GenerationProfile::default()
    };
    let instance = generate(seed, horizon, tasks, &profile).expect("generator accepts small shapes");
    for id in FormulationId::ALL {
        let model = build(id, &instance).expect("generated instance builds");
        let sol = lp_solve(&model);
        assert!(matches!(sol.status, LpStatus::Optimal | LpStatus::Infeasible), "{id}: {:?}", sol.status);
        if sol.status == LpStatus::Optimal {
            assert!(residuals(&model, &sol.values).max_violation() <= 1e-6, "{id}");
            let vertex = sample_vertex(&model, seed);
            assert_eq!(vertex.status, LpStatus::Optimal, "{id}");
            assert!(residuals(&model, &vertex.values).max_violation() <= 1e-6, "{id}");
        }
    }
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    fn replay(target: &str, check: fn(&[u8])) {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(target);
        let mut count = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            check(&std::fs::read(entry.unwrap().path()).unwrap());
            count += 1;
        }
        assert!(count > 0, "empty corpus {}", dir.display());
    }

    #[test]
    fn instance_corpus() {
        replay("instance_json", super::check_instance_json);
    }

    #[test]
    fn point_corpus() {
        replay("point_json", super::check_point_json);
    }

    #[test]
    fn solve_corpus() {
        replay("solve_generated", super::check_solve_generated);
    }
}

//! Invariants over randomized parameters.

use angiomet::config::{parse_times, RunConfig};
use angiomet::verify::check_bounds;
use angiomet::{
    Discretization, DrugSchedule, GrowthParams, InitialDensity, Model, Solver, SolverOptions,
    Therapy,
};
use proptest::prelude::*;

fn short_run(m: f64, primary: f64, dose: f64, rho0: f64) -> angiomet::SimulationSeries {
    let params = GrowthParams {
        m,
        ..GrowthParams::mouse().with_primary(primary, 625.0)
    };
    let therapy = Therapy {
        aa: (dose > 0.0).then(|| DrugSchedule::new(0.66, 1.7, dose, vec![0.2, 0.6]).unwrap()),
        ct: None,
    };
    let model = Model::tumor(&params, &therapy, None).unwrap();
    let init = if rho0 > 0.0 {
        InitialDensity::Box { x: (20.0, 400.0), theta: (500.0, 900.0), value: rho0 }
    } else {
        InitialDensity::Zero
    };
    let disc = Discretization {
        t_end: 1.0,
        dt: 0.05,
        dx: 100.0,
        ..Discretization::default()
    };
    Solver::new(model, disc, &init, SolverOptions::default())
        .unwrap()
        .run()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_stay_nonnegative_and_bounded(
        m in 0.0f64..0.05,
        primary in 1.0f64..500.0,
        dose in 0.0f64..50.0,
        rho0 in 0.0f64..1e-2,
    ) {
        let series = short_run(m, primary, dose, rho0);
        let report = check_bounds(&series);
        prop_assert!(report.nonnegative());
        prop_assert!(report.bounds_hold());
        prop_assert!(report.rho2_drift < 1e-12);
        for r in &series.rows {
            let total = r.emitted_primary + r.emitted_meta;
            prop_assert!((total - r.mass_rho1).abs() <= 1e-12 * r.mass_rho1.max(1e-300));
            prop_assert!(r.visible <= r.mi * (1.0 + 1e-12));
        }
        prop_assert!(series.rows.windows(2).all(|w| w[1].mi >= w[0].mi));
    }

    #[test]
    fn metastatic_index_grows_with_m(m in 1e-5f64..1e-2, factor in 1.5f64..10.0) {
        let low = short_run(m, 200.0, 0.0, 0.0).last().mi;
        let high = short_run(m * factor, 200.0, 0.0, 0.0).last().mi;
        prop_assert!(high > low);
    }

    #[test]
    fn expanded_schedules_are_sorted(
        every in 0.5f64..4.0,
        from in 0.0f64..10.0,
        span in 0.0f64..20.0,
        twice in any::<bool>(),
    ) {
        let rule = format!(
            "every {every} days from {from} to {}{}",
            from + span,
            if twice { " twice-daily" } else { "" }
        );
        let times = parse_times("times", &rule).unwrap();
        prop_assert_eq!(times[0], from);
        prop_assert!(times.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(*times.last().unwrap() <= from + span + 1e-9);
    }

    #[test]
    fn configuration_text_round_trips(
        m in 1e-5f64..1e-1,
        dt_steps in 1usize..50,
        dose in 0.1f64..100.0,
        first in 0.0f64..5.0,
    ) {
        let text = format!(
            "[growth]\nm_per_day_mm3alpha = {m}\n[discretization]\nt_end_day = 10\ndt_day = {}\n\
             [therapy.aa]\nefficacy_per_day_mg = 1.3\nclearance_per_day = 10.1\ndose_mg = {dose}\n\
             times = every 2 days from {first} to 9\n",
            10.0 / (dt_steps as f64 * 10.0)
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let again = RunConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(cfg, again);
    }
}

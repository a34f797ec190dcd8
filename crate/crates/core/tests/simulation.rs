use newsrhythm::abm::{
    sample_first_click, sample_interval, simulate_population, traces_to_corpus, AgentConfig, IntervalSource,
};
use newsrhythm::rng::rng_from_seed;
use newsrhythm::sessions::segment_all;
use newsrhythm::temporal::{fit_exponential, fit_power_law, ExponentialOptions, FitMethod, PowerLawOptions};
use newsrhythm::DAY_SECS;

#[test]
fn interval_draws_refit_to_exponent() {
    let cfg = AgentConfig::default();
    let mut rng = rng_from_seed(11);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| sample_interval(&cfg, &mut rng).unwrap() as f64)
        .collect();
    assert!(draws.iter().all(|d| (600.0..=21_600.0).contains(d)));
    let opts = PowerLawOptions {
        method: FitMethod::Mle,
        xmin: Some(600.0),
        xmax: Some(21_600.0),
        ..Default::default()
    };
    let alpha = fit_power_law(&draws, &opts).unwrap().param("alpha");
    assert!((alpha - 1.018).abs() <= 0.05, "{alpha}");
}

#[test]
fn first_click_hours_follow_uniform_profile() {
    let x = [1.0 / 24.0; 24];
    let mut rng = rng_from_seed(12);
    let draws = 24_000;
    let mut counts = [0usize; 24];
    for _ in 0..draws {
        let s = sample_first_click(&x, &mut rng).unwrap();
        assert!((0..DAY_SECS).contains(&s));
        counts[(s / 3600) as usize] += 1;
    }
    let expect = draws as f64 / 24.0;
    let sigma = (expect * (1.0 - 1.0 / 24.0)).sqrt();
    for (h, c) in counts.iter().enumerate() {
        assert!((*c as f64 - expect).abs() <= 3.0 * sigma, "hour {h}: {c}");
    }
}

#[test]
fn session_sizes_refit_to_rate() {
    let pop = simulate_population(1000, &AgentConfig::default(), 5).unwrap();
    let n: Vec<f64> = pop
        .traces
        .iter()
        .flat_map(|t| t.sessions.iter().map(|s| s.n() as f64))
        .collect();
    let fit = fit_exponential(&n, &ExponentialOptions::default()).unwrap();
    let lambda = fit.param("lambda");
    assert!((0.28..=0.34).contains(&lambda), "{lambda}");
}

#[test]
fn traces_resegment_to_the_same_sessions() {
    let cfg = AgentConfig::default();
    let pop = simulate_population(200, &cfg, 6).unwrap();
    let corpus = traces_to_corpus(&pop.traces);
    let sessions = segment_all(&corpus.click_times(), cfg.min_gap as i64).unwrap();
    let simulated: Vec<_> = pop.traces.iter().flat_map(|t| t.sessions.iter().cloned()).collect();
    assert_eq!(sessions, simulated);
}

#[test]
fn population_is_reproducible() {
    let cfg = AgentConfig {
        interval_source: IntervalSource::Empirical {
            pool: vec![30.0, 900.0, 4000.0, 20_000.0],
        },
        ..Default::default()
    };
    let a = simulate_population(50, &cfg, 77).unwrap();
    let b = simulate_population(50, &cfg, 77).unwrap();
    assert_eq!(a, b);
    let c = simulate_population(50, &cfg, 78).unwrap();
    assert_ne!(a.traces, c.traces);
}

use chrono::{Days, NaiveDate};
use stablefit::estimator::EstimationConfig;
use stablefit::make_params;
use stablefit::market::{log_returns, rolling_fit, PriceSeries, ReturnSeries, RollingResult};
use stablefit::sampler::sample;

fn dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap();
    (0..n).map(|i| start + Days::new(i as u64)).collect()
}

fn returns_series(returns: Vec<f64>) -> ReturnSeries {
    ReturnSeries {
        dates: dates(returns.len()),
        returns,
        symbol: "synthetic".into(),
    }
}

fn draws(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    let p = make_params(alpha, 0.0, 0.01, 0.0).unwrap();
    sample(&p, n, seed).unwrap().values
}

fn with_threads(n: usize, f: impl FnOnce() -> RollingResult + Send) -> RollingResult {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

#[test]
fn cumulative_sum_reconstructs_log_price() {
    let r = draws(1.7, 3000, 8);
    let mut prices = vec![1000.0];
    for x in &r {
        let last = *prices.last().unwrap();
        prices.push(last * x.exp());
    }
    let p = PriceSeries { dates: dates(prices.len()), prices, symbol: "x".into() };
    let back = log_returns(&p).unwrap();
    let mut acc = 0.0;
    for (t, x) in back.returns.iter().enumerate() {
        acc += x;
        let want = (p.prices[t + 1] / p.prices[0]).ln();
        assert!((acc - want).abs() < 1e-12 * (1.0 + want.abs()), "t={t}");
    }
}

#[test]
fn rolling_has_no_look_ahead() {
    let cfg = EstimationConfig::default();
    let base = returns_series(draws(1.6, 1400, 3));
    let res = rolling_fit(&base, 1000, &cfg).unwrap();
    let t = 1200;
    let mut perturbed = base.clone();
    for x in &mut perturbed.returns[t..] {
        *x = 5.0 * *x + 0.3;
    }
    let other = rolling_fit(&perturbed, 1000, &cfg).unwrap();
    let i = res.indices.iter().position(|&j| j == t).unwrap();
    assert_eq!(res.alphas[i].map(f64::to_bits), other.alphas[i].map(f64::to_bits));
    assert_eq!(res.betas[i].map(f64::to_bits), other.betas[i].map(f64::to_bits));
    assert_ne!(res.alphas[i + 1], other.alphas[i + 1]);
}

#[test]
fn rolling_is_thread_count_independent() {
    let cfg = EstimationConfig::default();
    let r = returns_series(draws(1.5, 1600, 4));
    let one = with_threads(1, || rolling_fit(&r, 1000, &cfg).unwrap());
    let many = with_threads(8, || rolling_fit(&r, 1000, &cfg).unwrap());
    assert_eq!(one, many);
    let bits = |v: &[Option<f64>]| v.iter().map(|x| x.map(f64::to_bits)).collect::<Vec<_>>();
    assert_eq!(bits(&one.alphas), bits(&many.alphas));
}

#[test]
fn spliced_regime_descends() {
    let cfg = EstimationConfig::default();
    let mut r = draws(1.9, 2000, 21);
    r.extend(draws(1.3, 2000, 22));
    let res = rolling_fit(&returns_series(r), 1000, &cfg).unwrap();
    let mean_over = |lo: usize, hi: usize| {
        let v: Vec<f64> = res
            .indices
            .iter()
            .zip(&res.alphas)
            .filter(|(t, _)| (lo..hi).contains(*t))
            .filter_map(|(_, a)| *a)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let before = mean_over(1000, 2000);
    let after = mean_over(3000, 4000);
    assert!((before - 1.9).abs() < 0.1, "{before}");
    assert!((after - 1.3).abs() < 0.1, "{after}");
    // across the transition, block means step downward
    let blocks: Vec<f64> = (0..5).map(|b| mean_over(2000 + 200 * b, 2200 + 200 * b)).collect();
    for w in blocks.windows(2) {
        assert!(w[1] < w[0] + 0.03, "{blocks:?}");
    }
    assert!(blocks[0] > blocks[4] + 0.3, "{blocks:?}");
}

#[test]
fn stationary_series_shows_no_trend() {
    let cfg = EstimationConfig::default();
    let slopes: Vec<f64> = (0..10u64)
        .map(|seed| {
            let res = rolling_fit(&returns_series(draws(1.6, 2500, 500 + seed)), 1000, &cfg).unwrap();
            let pts: Vec<(f64, f64)> = res
                .indices
                .iter()
                .zip(&res.alphas)
                .filter_map(|(t, a)| a.map(|a| (*t as f64, a)))
                .collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        })
        .collect();
    let m = slopes.iter().sum::<f64>() / 10.0;
    let sd = (slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / 9.0).sqrt();
    let t = m / (sd / 10f64.sqrt());
    // two-sided 99% point of Student t with 9 degrees of freedom
    assert!(t.abs() < 3.25, "t = {t}, slopes {slopes:?}");
}

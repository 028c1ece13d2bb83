//! Invariants over random inputs.

use chrono::NaiveDate;
use idriftnet_core::data::{daily_aggregate, merge_on_date, CellFlag, RawRecord};
use idriftnet_core::geo::{
    coriolis_parameter, displace, haversine_km, GeoPosition, VelocityEN, METERS_PER_DEGREE,
};
use idriftnet_core::metrics::{
    ade_euclidean, ade_geodesic, fde_euclidean, fde_geodesic, per_step_geodesic,
};
use idriftnet_core::physics::{
    iceberg_velocity, physics_step, wind_coefficients, wind_induced_drift, DriftCoefficients,
    EnvSample, PhysicsConfig,
};
use idriftnet_core::scaler::{MinMaxScaler, N_FEATURES};
use idriftnet_core::spectral::{
    gabor_filter, rotate_block, rotate_block_inverse, spectral_forward, GaborSpectralLayer,
    SequenceBlock,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn position() -> impl Strategy<Value = GeoPosition> {
    (-85.0..85.0f64, -180.0..180.0f64).prop_map(|(lat, lon)| GeoPosition::new(lat, lon).unwrap())
}

fn velocity(max: f64) -> impl Strategy<Value = VelocityEN> {
    (-max..max, -max..max).prop_map(|(e, n)| VelocityEN::new(e, n).unwrap())
}

fn env() -> impl Strategy<Value = EnvSample> {
    (
        -30.0..30.0f64,
        -30.0..30.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        1.0..10_000.0f64,
    )
        .prop_map(|(u, v, uo, vo, area)| EnvSample::new(u, v, uo, vo, area).unwrap())
}

fn block(max_steps: usize, max_channels: usize) -> impl Strategy<Value = SequenceBlock> {
    (2..=max_steps, 1..=max_channels).prop_flat_map(|(t, c)| {
        prop::collection::vec(-2.0..2.0f64, t * c)
            .prop_map(move |data| SequenceBlock::from_vec(t, c, data).unwrap())
    })
}

fn track(len: usize) -> impl Strategy<Value = Vec<GeoPosition>> {
    prop::collection::vec(position(), len)
}

fn dlon(a: f64, b: f64) -> f64 {
    (a - b + 540.0).rem_euclid(360.0) - 180.0
}

proptest! {
    #[test]
    fn haversine_is_a_metric(a in position(), b in position(), c in position()) {
        let ab = haversine_km(a, b);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, haversine_km(b, a));
        prop_assert_eq!(haversine_km(a, a), 0.0);
        prop_assert!(haversine_km(a, c) <= ab + haversine_km(b, c) + 1e-9);
    }

    #[test]
    fn coriolis_is_odd(lat in -90.0..90.0f64) {
        prop_assert_eq!(coriolis_parameter(-lat), -coriolis_parameter(lat));
    }

    #[test]
    fn displace_then_reverse_returns(
        lat in -80.0..80.0f64,
        lon in -180.0..180.0f64,
        east in -0.5..0.5f64,
        north in -0.5..0.5f64,
    ) {
        // Pure east or pure north moves, where the tangent-plane step is
        // exactly reversible.
        let start = GeoPosition::new(lat, lon).unwrap();
        for v in [VelocityEN::new(east, 0.0).unwrap(), VelocityEN::new(0.0, north).unwrap()] {
            let there = displace(start, v, 86_400.0).unwrap();
            let back = displace(there, v.scale(-1.0), 86_400.0).unwrap();
            prop_assert!((back.lat() - lat).abs() < 1e-9);
            prop_assert!(dlon(back.lon(), lon).abs() < 1e-9);
        }
    }

    #[test]
    fn hemispheres_mirror_the_cross_wind_component(
        wind in velocity(30.0),
        lat in 1.0..80.0f64,
        l in 0.01..50.0f64,
    ) {
        let coeffs = wind_coefficients(l, &PhysicsConfig::default()).unwrap();
        let north = wind_induced_drift(wind, &coeffs, lat);
        let south = wind_induced_drift(wind, &coeffs, -lat);
        let norm = wind.norm().max(1e-12);
        let (ux, uy) = (wind.east / norm, wind.north / norm);
        let along = |v: VelocityEN| v.east * ux + v.north * uy;
        let across = |v: VelocityEN| -v.east * uy + v.north * ux;
        prop_assert!((along(north) - along(south)).abs() < 1e-12);
        prop_assert!((across(north) + across(south)).abs() < 1e-12);
    }

    #[test]
    fn wind_response_grows_with_wind_speed(
        dir in 0.0..std::f64::consts::TAU,
        lat in prop_oneof![-80.0..-2.0f64, 2.0..80.0f64],
        area in 1.0..10_000.0f64,
    ) {
        let cfg = PhysicsConfig::default();
        let pos = GeoPosition::new(lat, 0.0).unwrap();
        let mut last = 0.0;
        for k in 0..60 {
            let speed = 0.5 * k as f64;
            let e = EnvSample::new(speed * dir.cos(), speed * dir.sin(), 0.1, -0.05, area).unwrap();
            let v = iceberg_velocity(&e, pos, &cfg).unwrap();
            let response = ((v.east - 0.1).powi(2) + (v.north + 0.05).powi(2)).sqrt();
            prop_assert!(response >= last - 1e-15, "speed {speed}: {response} < {last}");
            last = response;
        }
    }

    #[test]
    fn physics_step_is_straight_line_advection(pos in position(), e in env()) {
        let cfg = PhysicsConfig::default();
        prop_assume!(pos.lat().abs() > 1.0);
        let v = iceberg_velocity(&e, pos, &cfg).unwrap();
        let next = physics_step(pos, &e, &cfg).unwrap();
        let dlat = v.north * cfg.dt / METERS_PER_DEGREE;
        let dl = v.east * cfg.dt / (METERS_PER_DEGREE * pos.lat().to_radians().cos());
        prop_assert!((next.lat() - (pos.lat() + dlat)).abs() < 1e-10);
        prop_assert!(dlon(next.lon(), pos.lon() + dl).abs() < 1e-10);
    }

    #[test]
    fn rotation_permutes_each_channel(x in block(16, 9)) {
        let r = rotate_block(&x);
        for c in 0..x.channels() {
            let mut a = x.channel(c);
            let mut b = r.channel(c);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(rotate_block_inverse(&r), x);
    }

    #[test]
    fn gabor_mask_is_bounded_and_peaks_at_mu(
        mu in 0.0..1.0f64,
        sigma in 0.05..3.0f64,
        modes in 1usize..12,
    ) {
        let g = gabor_filter(mu, sigma, modes);
        let freq = |m: usize| if modes > 1 { m as f64 / (modes - 1) as f64 } else { 0.0 };
        for m in 0..modes {
            prop_assert!(g[m] > 0.0 && g[m] <= 1.0);
            for n in 0..modes {
                if (freq(m) - mu).abs() < (freq(n) - mu).abs() {
                    prop_assert!(g[m] >= g[n]);
                }
            }
        }
    }

    #[test]
    fn spectral_layer_is_linear_in_its_input(
        seed in any::<u64>(),
        steps in 2usize..10,
        d_in in 1usize..6,
        d_out in 1usize..6,
        alpha in -3.0..3.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = GaborSpectralLayer::random(d_in, d_out, steps, &mut rng);
        let rand_block = |rng: &mut ChaCha8Rng| {
            use rand::Rng;
            SequenceBlock::from_vec(steps, d_in, (0..steps * d_in).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
        };
        let x = rand_block(&mut rng);
        let y = rand_block(&mut rng);
        let sum = SequenceBlock::from_vec(
            steps,
            d_in,
            x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| alpha * a + b).collect(),
        )
        .unwrap();
        let fx = spectral_forward(&x, &layer).unwrap();
        let fy = spectral_forward(&y, &layer).unwrap();
        let fsum = spectral_forward(&sum, &layer).unwrap();
        for k in 0..fx.as_slice().len() {
            let want = alpha * fx.as_slice()[k] + fy.as_slice()[k];
            prop_assert!((fsum.as_slice()[k] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn ade_and_fde_follow_per_step_errors(
        (pred, truth) in (1usize..30).prop_flat_map(|n| (track(n), track(n)))
    ) {
        let n = pred.len();
        let steps = per_step_geodesic(&pred, &truth).unwrap();
        prop_assert_eq!(fde_geodesic(&pred, &truth).unwrap(), steps[n - 1]);
        prop_assert_eq!(ade_geodesic(&pred, &truth).unwrap(), steps.iter().sum::<f64>() / n as f64);

        let rev = |v: &[GeoPosition]| v.iter().rev().copied().collect::<Vec<_>>();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        for metric in [ade_geodesic, ade_euclidean] {
            let base = metric(&pred, &truth).unwrap();
            prop_assert!(close(base, metric(&truth, &pred).unwrap()));
            prop_assert!(close(base, metric(&rev(&pred), &rev(&truth)).unwrap()));
        }
        prop_assert!(close(fde_euclidean(&pred, &truth).unwrap(), fde_euclidean(&truth, &pred).unwrap()));
    }

    #[test]
    fn small_equatorial_offsets_agree_across_unit_systems(
        lat in -1.0..1.0f64,
        lon in -170.0..170.0f64,
        dlat in -0.07..0.07f64,
        dlon_ in -0.07..0.07f64,
    ) {
        prop_assume!(dlat.hypot(dlon_) > 1e-6);
        let a = GeoPosition::new(lat, lon).unwrap();
        let b = GeoPosition::new(lat + dlat, lon + dlon_).unwrap();
        let deg = ade_euclidean(&[a], &[b]).unwrap();
        let km = ade_geodesic(&[a], &[b]).unwrap();
        let one_degree = 111.195;
        prop_assert!((km - deg * one_degree).abs() / km < 0.015);
    }

    #[test]
    fn scaler_round_trips(
        rows in prop::collection::vec(prop::array::uniform7(-1000.0..1000.0f64), 1..20),
        frac in prop::array::uniform7(-0.5..1.5f64),
    ) {
        let s = MinMaxScaler::fit(&rows).unwrap();
        for row in &rows {
            for (k, z) in s.transform(row).iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(z), "feature {k}: {z}");
            }
        }
        for (k, f) in frac.iter().enumerate() {
            let (lo, hi) = (s.min()[k], s.max()[k]);
            if hi > lo {
                let x = lo + f * (hi - lo);
                let back = s.inverse_value(k, s.transform_value(k, x));
                prop_assert!((back - x).abs() <= 1e-12 * (hi - lo).max(x.abs()));
            } else {
                // A constant feature maps to 0.5 and back to its value.
                prop_assert_eq!(s.transform_value(k, lo), 0.5);
                prop_assert_eq!(s.inverse_value(k, 0.5), lo);
            }
        }
    }

    #[test]
    fn aggregation_is_idempotent(recs in records(12)) {
        let once = daily_aggregate(&recs);
        prop_assert_eq!(daily_aggregate(&once), once.clone());
        prop_assert!(once.windows(2).all(|w| w[0].date < w[1].date));
    }

    #[test]
    fn merge_is_complete_and_conserves_observations(
        pos_days in prop::collection::btree_set(0u64..20, 2..8),
        env_recs in records(20),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions: Vec<RawRecord> = pos_days
            .iter()
            .map(|d| {
                let mut v = [None; N_FEATURES];
                v[0] = Some(rng.gen_range(-70.0..-50.0));
                v[1] = Some(rng.gen_range(-60.0..-30.0));
                RawRecord::new(day(*d), v)
            })
            .collect();
        let mut env = env_recs;
        // Guarantee every forcing field is observed somewhere in range.
        let mut full = [Some(1.0); N_FEATURES];
        full[0] = None;
        full[1] = None;
        env.push(RawRecord::new(day(*pos_days.iter().next().unwrap()), full));
        let merged = merge_on_date(&positions, &[env.clone()]).unwrap();

        prop_assert!(merged.dates.windows(2).all(|w| (w[1] - w[0]).num_days() == 1));
        prop_assert!(merged.values.iter().flatten().all(|v| v.is_finite()));
        prop_assert_eq!(merged.values.len(), merged.len());
        for p in &positions {
            let t = (p.date - merged.dates[0]).num_days() as usize;
            prop_assert_eq!(merged.values[t][0], p.values[0].unwrap());
            prop_assert_eq!(merged.flags[t][0], CellFlag::Observed);
        }
        // A forcing value from a lone record on a lone day survives untouched.
        let agg = daily_aggregate(&env);
        for r in &agg {
            let Some(t) = merged.dates.iter().position(|d| *d == r.date) else { continue };
            for k in 2..N_FEATURES {
                if let Some(v) = r.values[k] {
                    if r.counts[k] == 1 {
                        prop_assert_eq!(merged.values[t][k], v);
                        prop_assert_eq!(merged.flags[t][k], CellFlag::Observed);
                    }
                }
            }
        }
    }
}

fn day(d: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + chrono::Days::new(d)
}

fn records(max_day: u64) -> impl Strategy<Value = Vec<RawRecord>> {
    let field = prop::option::of(-5.0..5.0f64);
    prop::collection::vec((0..max_day, field.clone(), field.clone(), field), 0..15).prop_map(
        |rows| {
            rows.into_iter()
                .map(|(d, a, b, c)| {
                    let mut v = [None; N_FEATURES];
                    v[3] = a;
                    v[4] = b;
                    v[5] = c;
                    RawRecord::new(day(d), v)
                })
                .collect()
        },
    )
}

#[test]
fn small_l_limits() {
    let cfg = PhysicsConfig::default();
    for (l, tol) in [(1e-1, 1e-2), (1e-2, 1e-4), (1e-3, 1e-6)] {
        let DriftCoefficients { a, b, .. } = wind_coefficients(l, &cfg).unwrap();
        assert!((a / l - 1.0).abs() < tol, "a({l})/{l} = {}", a / l);
        assert!(
            (b / (l * l * l) - 1.0).abs() < tol,
            "b({l})/{l}^3 = {}",
            b / (l * l * l)
        );
    }
}

#[test]
fn large_l_limit() {
    let c = wind_coefficients(1e3, &PhysicsConfig::default()).unwrap();
    assert!((c.a * 1e3 - 1.0).abs() < 1e-4);
    assert!((c.b - 1.0).abs() < 1e-4);
}

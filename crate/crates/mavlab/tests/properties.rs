//! Randomized cross-checks of the closed forms against independent
//! numerical routes, plus structural property tests.

use mavlab::amm::{
    decode_sqrt_price, ClmmPool, CpmmPool, FeeApplication, FeeParams, SwapAmount, SwapDirection,
    TickRange, TokenMeta,
};
use mavlab::arb::{cex_trade_profit, clmm_cex_mav, cpmm_cex_mav, numeric_mav, Direction};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

struct CexConfig {
    pool: CpmmPool,
    p_cex: f64,
    fees: FeeParams,
}

fn random_cex_config(rng: &mut impl Rng) -> CexConfig {
    let x = log_uniform(rng, 1e-2, 1e6);
    let p_amm = log_uniform(rng, 1e-3, 1e5);
    let epsilon = rng.gen_range(-0.15..0.15);
    let fees = FeeParams::new(
        rng.gen_range(0.0..0.005),
        rng.gen_range(0.0..0.002),
        0.0,
    )
    .unwrap();
    CexConfig {
        pool: CpmmPool::synthetic(x, x * p_amm, fees).unwrap(),
        p_cex: p_amm * (1.0 + epsilon),
        fees,
    }
}

/// Golden-section route over the simulated profit, matching the closed
/// form's direction conventions.
fn oracle(cfg: &CexConfig) -> (f64, f64) {
    let p_amm = cfg.pool.spot_price();
    let x = cfg.pool.reserve_x();
    if p_amm < cfg.p_cex {
        let profit = |dx: f64| {
            cex_trade_profit(&cfg.pool, cfg.p_cex, &cfg.fees, dx, Direction::BuyAmmSellCex)
                .unwrap_or(f64::NEG_INFINITY)
        };
        numeric_mav(profit, (0.0, x * (1.0 - 1e-9))).unwrap()
    } else {
        let profit = |dx: f64| {
            cex_trade_profit(&cfg.pool, cfg.p_cex, &cfg.fees, dx, Direction::BuyCexSellAmm)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let hi = x * (p_amm / cfg.p_cex).sqrt() / (1.0 - cfg.fees.cex_fee);
        numeric_mav(profit, (0.0, hi)).unwrap()
    }
}

#[test]
fn closed_form_tracks_golden_section_over_random_configs() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0001);
    for case in 0..1000 {
        let cfg = random_cex_config(&mut rng);
        let opp = cpmm_cex_mav(&cfg.pool, cfg.p_cex, &cfg.fees).unwrap();
        let (dx_oracle, mav_oracle) = oracle(&cfg);
        let mav_oracle = mav_oracle.max(0.0);
        assert!(
            (opp.mav - mav_oracle).abs() <= 1e-6 * mav_oracle.max(1.0),
            "case {case}: closed {} oracle {}",
            opp.mav,
            mav_oracle
        );
        assert!(
            (opp.dx_max - dx_oracle).abs() <= 1e-6 * cfg.pool.reserve_x(),
            "case {case}: closed dx {} oracle dx {}",
            opp.dx_max,
            dx_oracle
        );
    }
}

#[test]
fn executing_dx_max_lands_on_fee_adjusted_cex_price() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0002);
    let mut exercised = 0;
    for _ in 0..1000 {
        let cfg = random_cex_config(&mut rng);
        let opp = cpmm_cex_mav(&cfg.pool, cfg.p_cex, &cfg.fees).unwrap();
        if opp.dx_max == 0.0 {
            continue;
        }
        exercised += 1;
        let wedge = cfg.fees.wedge();
        let landed = match opp.direction {
            Direction::BuyAmmSellCex => {
                cfg.pool
                    .swap(opp.dx_max, SwapDirection::ExtractBase, FeeApplication::None)
                    .unwrap()
                    .pool
                    .spot_price()
            }
            Direction::BuyCexSellAmm => {
                let deposited = opp.dx_max * (1.0 - cfg.fees.cex_fee);
                cfg.pool
                    .swap(deposited, SwapDirection::DepositBase, FeeApplication::None)
                    .unwrap()
                    .pool
                    .spot_price()
            }
            Direction::CrossPool => unreachable!(),
        };
        let target = match opp.direction {
            Direction::BuyAmmSellCex => wedge * cfg.p_cex,
            _ => cfg.p_cex / wedge,
        };
        assert!(
            (landed - target).abs() <= 1e-9 * target,
            "landed {landed}, target {target}"
        );
        assert!((opp.post_trade_amm_price - target).abs() <= 1e-12 * target);
    }
    assert!(exercised > 500, "only {exercised} tradable cases");
}

#[test]
fn mav_is_monotone_in_gap_and_reserve() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0003);
    for _ in 0..200 {
        let x = log_uniform(&mut rng, 1e-1, 1e5);
        let p_amm = log_uniform(&mut rng, 1e-2, 1e4);
        let fees = FeeParams::new(rng.gen_range(0.0..0.004), rng.gen_range(0.0..0.002), 0.0)
            .unwrap();
        let pool = CpmmPool::synthetic(x, x * p_amm, fees).unwrap();

        // Monotone in |epsilon| for each sign.
        for sign in [1.0, -1.0] {
            let mut last = 0.0f64;
            for step in 1..=10 {
                let eps = sign * 0.02 * step as f64;
                let mav = cpmm_cex_mav(&pool, p_amm * (1.0 + eps), &fees).unwrap().mav;
                assert!(
                    mav >= last - 1e-12 * last.abs(),
                    "mav not monotone in gap: {mav} after {last}"
                );
                last = mav;
            }
        }
        // Monotone in the base reserve.
        let p_cex = p_amm * 1.05;
        let mut last = 0.0;
        for scale in [1.0, 2.0, 5.0, 10.0] {
            let scaled = CpmmPool::synthetic(x * scale, x * scale * p_amm, fees).unwrap();
            let mav = cpmm_cex_mav(&scaled, p_cex, &fees).unwrap().mav;
            assert!(mav >= last);
            last = mav;
        }
    }
}

#[test]
fn mav_scales_exactly_with_power_of_two_reserves() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0004);
    for _ in 0..200 {
        let cfg = random_cex_config(&mut rng);
        let base = cpmm_cex_mav(&cfg.pool, cfg.p_cex, &cfg.fees).unwrap();
        for k in [0.5, 2.0, 8.0, 1024.0] {
            let scaled_pool = CpmmPool::synthetic(
                cfg.pool.reserve_x() * k,
                cfg.pool.reserve_y() * k,
                cfg.fees,
            )
            .unwrap();
            let scaled = cpmm_cex_mav(&scaled_pool, cfg.p_cex, &cfg.fees).unwrap();
            assert_eq!(scaled.mav, base.mav * k);
            assert_eq!(scaled.dx_max, base.dx_max * k);
        }
    }
}

#[test]
fn mav_is_positive_iff_gap_clears_fee_wedge() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0005);
    for _ in 0..1000 {
        let cfg = random_cex_config(&mut rng);
        let opp = cpmm_cex_mav(&cfg.pool, cfg.p_cex, &cfg.fees).unwrap();
        let p = cfg.pool.spot_price();
        let wedge = cfg.fees.wedge();
        let (hi, lo) = if cfg.p_cex >= p {
            (cfg.p_cex, p)
        } else {
            (p, cfg.p_cex)
        };
        let clears = wedge * hi > lo;
        assert!(opp.mav >= 0.0);
        assert_eq!(opp.mav > 0.0, clears, "wedge gate mismatch");
        assert_eq!(opp.dx_max > 0.0, clears);
    }
}

/// Random multi-range pool around price 1.0 with the current price in an
/// interior range.
fn random_clmm(rng: &mut impl Rng, fees: FeeParams) -> ClmmPool {
    let n_ranges = rng.gen_range(1..=8usize);
    let mut ranges = Vec::with_capacity(n_ranges);
    // Contiguous ranges spanning a wide band around tick 0.
    let width = rng.gen_range(400..2200);
    let start = -(width * n_ranges as i32) / 2;
    let mut lower = start;
    for _ in 0..n_ranges {
        let upper = lower + width;
        ranges.push(TickRange::new(lower, upper, log_uniform(rng, 50.0, 5e4)).unwrap());
        lower = upper;
    }
    ClmmPool::synthetic(ranges, 1.0, fees).unwrap()
}

#[test]
fn tick_walk_total_matches_whole_pool_trade_optimum() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_0006);
    let mut exercised = 0;
    for case in 0..60 {
        let fees = FeeParams::new(rng.gen_range(0.0..0.004), rng.gen_range(0.0..0.002), 0.0)
            .unwrap();
        let pool = random_clmm(&mut rng, fees);
        let epsilon = rng.gen_range(-0.08..0.08f64);
        let p_cex = pool.spot_price() * (1.0 + epsilon);
        if p_cex <= 0.0 {
            continue;
        }
        let walk = clmm_cex_mav(&pool, p_cex, &fees).unwrap();
        if walk.opportunity.mav == 0.0 {
            continue;
        }
        exercised += 1;

        let wedge = fees.wedge();
        let up = pool.spot_price() < p_cex;
        // Whole-pool simulation: profit of a single trade of the given
        // size, golden-section over the size.
        let capacity: f64 = pool
            .ranges()
            .iter()
            .map(|r| {
                let s = pool.sqrt_price();
                if up {
                    if r.sqrt_upper() <= s {
                        0.0
                    } else {
                        r.liquidity * (1.0 / r.sqrt_lower().max(s) - 1.0 / r.sqrt_upper())
                    }
                } else if r.sqrt_lower() >= s {
                    0.0
                } else {
                    r.liquidity * (1.0 / r.sqrt_lower() - 1.0 / r.sqrt_upper().min(s))
                }
            })
            .sum();
        let profit = |dx: f64| -> f64 {
            if up {
                match pool.swap(SwapAmount::Base(dx), SwapDirection::ExtractBase, FeeApplication::None)
                {
                    Ok(out) => wedge * p_cex * dx - out.quote_amount,
                    Err(_) => f64::NEG_INFINITY,
                }
            } else {
                let deposited = dx * (1.0 - fees.cex_fee);
                match pool.swap(
                    SwapAmount::Base(deposited),
                    SwapDirection::DepositBase,
                    FeeApplication::None,
                ) {
                    Ok(out) => (1.0 - fees.lp_fee) * out.quote_amount - dx * p_cex,
                    Err(_) => f64::NEG_INFINITY,
                }
            }
        };
        let hi = if up {
            capacity * (1.0 - 1e-9)
        } else {
            capacity * (1.0 - 1e-9) / (1.0 - fees.cex_fee)
        };
        let (_, mav_sim) = numeric_mav(profit, (0.0, hi)).unwrap();
        let mav_sim = mav_sim.max(0.0);
        assert!(
            (walk.opportunity.mav - mav_sim).abs() <= 1e-6 * mav_sim.max(1e-12),
            "case {case}: walk {} sim {} ({} legs, exhausted {})",
            walk.opportunity.mav,
            mav_sim,
            walk.legs.len(),
            walk.exhausted
        );
        // Per-range values are individually nonnegative and sum to the
        // total.
        let leg_sum: f64 = walk.legs.iter().map(|l| l.mav).sum();
        assert!((leg_sum - walk.opportunity.mav).abs() <= 1e-9 * leg_sum.max(1e-12));
        for leg in &walk.legs {
            assert!(leg.mav >= 0.0);
        }
    }
    assert!(exercised >= 30, "only {exercised} tradable cases");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_conserved_for_any_feasible_swap(
        x in 1e-3..1e9f64,
        y in 1e-3..1e9f64,
        frac in 0.0..0.999f64,
        deposit in proptest::bool::ANY,
    ) {
        let pool = CpmmPool::synthetic(x, y, FeeParams::new(0.003, 0.0, 0.0).unwrap()).unwrap();
        let dx = x * frac;
        let direction = if deposit { SwapDirection::DepositBase } else { SwapDirection::ExtractBase };
        let out = pool.swap(dx, direction, FeeApplication::Exclusive).unwrap();
        let k0 = x * y;
        let k1 = out.pool.reserve_x() * out.pool.reserve_y();
        prop_assert!(((k1 - k0) / k0).abs() < 1e-12);
    }

    #[test]
    fn price_impact_equals_relative_quote_change(
        x in 1e-3..1e9f64,
        y in 1e-3..1e9f64,
        frac in 0.0..0.999f64,
    ) {
        let pool = CpmmPool::synthetic(x, y, FeeParams::zero()).unwrap();
        let dx = x * frac;
        let rho = pool.price_impact(dx).unwrap();
        let out = pool.swap(dx, SwapDirection::ExtractBase, FeeApplication::None).unwrap();
        let dy_over_y = out.quote_amount / y;
        prop_assert!((rho - dy_over_y).abs() <= 1e-12 * rho.max(1.0));
    }

    #[test]
    fn fee_free_round_trip_restores_reserves(
        x in 1e-3..1e6f64,
        y in 1e-3..1e6f64,
        frac in 0.0..0.9f64,
    ) {
        let pool = CpmmPool::synthetic(x, y, FeeParams::zero()).unwrap();
        let dx = x * frac;
        let fwd = pool.swap(dx, SwapDirection::ExtractBase, FeeApplication::None).unwrap();
        let back = fwd.pool.swap(dx, SwapDirection::DepositBase, FeeApplication::None).unwrap();
        prop_assert!(((back.pool.reserve_x() - x) / x).abs() < 1e-9);
        prop_assert!(((back.pool.reserve_y() - y) / y).abs() < 1e-9);
    }

    #[test]
    fn sqrt_price_decoding_is_strictly_monotone(
        a in 1u128..u128::MAX,
        b in 1u128..u128::MAX,
        shift in 0u32..32,
    ) {
        prop_assume!(a != b);
        let token0 = TokenMeta::new("A", 6, false).unwrap();
        let token1 = TokenMeta::new("B", 18, false).unwrap();
        let big_a = BigUint::from(a) << shift;
        let big_b = BigUint::from(b) << shift;
        let pa = decode_sqrt_price(&big_a, &token0, &token1).unwrap();
        let pb = decode_sqrt_price(&big_b, &token0, &token1).unwrap();
        prop_assert_eq!(big_a.cmp(&big_b), pa.cmp_exact(&pb));
    }
}

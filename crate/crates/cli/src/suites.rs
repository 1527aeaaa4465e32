use crate::config::Settings;
use crate::report::{Check, Outcome, Table};
use anyhow::{bail, Context, Result};
use g2glue::eguchi_hanson::{
    ale_decay, bolt_area, product_relation_residual, product_structure, product_torsion_fd, radius, ricci_norm,
    EhParams, RadialProfile,
};
use g2glue::fibre::{
    flat_oracle, solve_poisson, uniqueness_gap, verify_rates, OuterBoundary, RadialGrid, RadialOperator,
};
use g2glue::forms::{loglog_slope, KForm, ModelSpace};
use g2glue::g2::{
    double_contraction, fd_theta_jacobian, phi0, psi0, pulled_back_phi0, random_direction, random_frame, theta,
    G2Structure,
};
use g2glue::glue::{
    alpha_window, alpha_window_from, reference_cell, torsion_table, NormColumn, Region, REFERENCE_AGGREGATE,
};
use g2glue::hk4::{hyperkahler_maps, hyperkahler_ranks, check_frame, compare_formulas, star_splitting_failures};
use g2glue::hk4::{ProductPoint, QuaternionicFrame};
use g2glue::linalg::Mat;
use g2glue::scalar::{format_rational, parse_rational, Rational, Scalar};
use g2glue::topology::{fixed_orbits, preset, resolve_betti, AffineAction, AffineMap, BettiVector, PRESETS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;
use std::f64::consts::PI;
use std::path::Path;

pub type Suite = (Vec<Check>, Vec<Table>);

fn form_match<S: Scalar>(a: &KForm<S>, b: &KForm<S>) -> Outcome {
    let diff = a.max_abs_diff(b);
    if S::EXACT {
        Outcome::exact(diff, 0.0)
    } else {
        Outcome::below(diff, 1e-12)
    }
}

pub fn identities<S: Scalar + Send + Sync + 'static>() -> Suite {
    let mut checks = vec![
        Check::new("identities.theta_model", "dual of the model 3-form", || {
            let th = theta(&phi0::<S>())?;
            let star = ModelSpace::<S>::euclidean(7).hodge(&phi0())?;
            let o = form_match(&th, &star);
            Ok(if th.max_abs_diff(&psi0()) > 1e-12 { Outcome { passed: false, ..o } } else { o })
        }),
        Check::new("identities.quaternionic_frame", "quaternionic relations and star of alpha wedge omega", || {
            let rep = check_frame(&QuaternionicFrame::<S>::standard())?;
            Ok(Outcome::exact(&rep.failures, Vec::<String>::new()).with_note(format!("{} identities", rep.checked)))
        }),
        Check::new("identities.projector_ranks", "type decomposition of 2- and 3-forms", || {
            let st = G2Structure::<S>::standard();
            let ranks = |d: usize| -> Result<Vec<usize>> {
                Ok(st.projector(d)?.components.iter().map(|(_, m)| m.rank()).collect())
            };
            Ok(Outcome::exact([ranks(3)?, ranks(2)?], [vec![1, 7, 27], vec![7, 14]]))
        }),
    ];
    for i in 0..7 {
        checks.push(Check::new(
            format!("identities.double_contraction.e{}", i + 1),
            "double contraction of a 1-form with the 3-form",
            move || {
                let st = G2Structure::<S>::standard();
                let a = KForm::<S>::basis_element(7, &[i]);
                Ok(form_match(&double_contraction(&st, &a)?, &a.scale(&S::from_i64(-4))))
            },
        ));
    }
    for (label, num, den) in [("1", 1, 1), ("2", 2, 1), ("1_3", 1, 3)] {
        checks.push(Check::new(
            format!("identities.star_splitting.t{label}"),
            "Hodge star on the scaled product",
            move || {
                let pt = ProductPoint::standard(S::ratio(num, den))?;
                let (total, failed) = star_splitting_failures(&pt)?;
                Ok(Outcome::exact(failed, 0).with_note(format!("{total} pairs")))
            },
        ));
    }
    (checks, Vec::new())
}

pub fn linearization(settings: &Settings) -> Suite {
    let seed = settings.seed;
    let tol = settings.tol("jacobian", 1e-4);
    let mut checks = Vec::new();
    for k in 0..=10usize {
        checks.push(Check::new(format!("linearization.jacobian.{k:02}"), "derivative of theta", move || {
            let phi = if k == 0 {
                phi0::<f64>()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
                pulled_back_phi0(&random_frame(&mut rng, 0.3))?
            };
            let st = G2Structure::new(phi.clone())?;
            let exact = st.linearization_matrix()?;
            let fd = fd_theta_jacobian(&phi, 1e-5)?;
            Ok(Outcome::below(exact.sub(&fd).max_abs() / exact.max_abs(), tol))
        }));
    }
    for k in 0..3u64 {
        checks.push(Check::new(format!("linearization.remainder.{k}"), "quadratic remainder of theta", move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(100 + k));
            let dir = random_direction(&mut rng);
            let st = G2Structure::<f64>::standard();
            let sizes = [1e-2, 1e-3, 1e-4];
            let norms: Vec<f64> =
                sizes.iter().map(|s| Ok(st.remainder(&dir.scale(s))?.coeff_norm())).collect::<Result<_>>()?;
            Ok(Outcome::within(loglog_slope(&sizes, &norms), 2.0, 0.05))
        }));
    }
    (checks, Vec::new())
}

pub fn product<S: Scalar + Send + Sync + 'static>() -> Suite {
    let checks = [("1", 1, 1), ("2", 2, 1), ("1_3", 1, 3)]
        .into_iter()
        .map(|(label, num, den)| {
            Check::new(format!("product.t{label}"), "closed forms against projection", move || {
                let rep = compare_formulas(&ProductPoint::standard(S::ratio(num, den))?)?;
                let counts = [rep.pi7_mismatches, rep.dtheta_mismatches, rep.linearization_mismatches];
                Ok(Outcome::exact(counts, [0, 0, 0]).with_note(format!("{} inputs", rep.inputs)))
            })
        })
        .collect();
    (checks, Vec::new())
}

pub fn hk_maps<S: Scalar + Send + Sync + 'static>() -> Suite {
    let check = Check::new("hk_maps.ranks", "hyperKaehler linear maps", || {
        let r = hyperkahler_ranks(&hyperkahler_maps(&QuaternionicFrame::<S>::standard())?);
        Ok(Outcome::exact(
            json!({"kernel_a": r.kernel_a, "rank_b": r.rank_b, "image_b_is_kernel_a": r.image_b_is_kernel_a, "rank_c": r.rank_c}),
            json!({"kernel_a": 15, "rank_b": 15, "image_b_is_kernel_a": true, "rank_c": 48}),
        ))
    });
    (vec![check], Vec::new())
}

fn sample_points(seed: u64, count: usize, dim: usize, min_radius: f64, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5) * scale).collect();
        if radius(&p[dim - 4..]) >= min_radius * scale {
            out.push(p);
        }
    }
    out
}

pub fn eguchi_hanson(settings: &Settings) -> Result<Suite> {
    let (a, t, seed) = (settings.a, settings.t, settings.seed);
    EhParams::new(a, t)?;
    let ricci_tol = settings.tol("ricci", 1e-4);
    let root = a.sqrt();
    let mut checks = vec![
        Check::new("eh.potential_forms", "two closed forms of the Kaehler potential", move || {
            let p = RadialProfile::new(a)?;
            let mut worst = 0.0f64;
            let mut r = 1e-3;
            while r <= 1e3 {
                let (x, y) = (p.f_quotient_form(r)?, p.f_log_form(r)?);
                worst = worst.max((x - y).abs() / x.abs().max(1.0));
                r *= 1.37;
            }
            Ok(Outcome::below(worst, 1e-12 + f64::EPSILON))
        }),
        Check::new("eh.ale_slope", "ALE decay of the metric", move || {
            let radii: Vec<f64> = (0..=10).map(|i| 5.0 * root * 10f64.powf(i as f64 / 10.0)).collect();
            let (_, slope) = ale_decay(a, &radii)?;
            Ok(Outcome::within(slope, -4.0, 0.1))
        }),
        Check::new("eh.bolt_area", "area of the exceptional sphere", move || {
            let area = bolt_area(&EhParams::new(a, t)?)?;
            let expect = PI * a * t * t;
            Ok(Outcome::below(((area - expect) / expect).abs(), 1e-3).with_note(format!("area {area}")))
        }),
    ];
    for (k, y) in sample_points(seed, 5, 4, 0.4, root).into_iter().enumerate() {
        checks.push(Check::new(format!("eh.ricci.{k}"), "Ricci flatness", move || {
            let r = radius(&y);
            let ric = ricci_norm(a, &y, r / 200.0)?;
            let ratio = ricci_norm(a, &y, r / 8.0)? / ricci_norm(a, &y, r / 16.0)?;
            let o = Outcome::below(ric, ricci_tol).with_note(format!("halving ratio {ratio:.2}"));
            Ok(Outcome { passed: o.passed && ratio > 8.0, ..o })
        }));
    }
    for (k, p) in sample_points(seed.wrapping_add(1), 5, 7, 0.3, root).into_iter().enumerate() {
        let p2 = p.clone();
        checks.push(Check::new(format!("eh.product_theta.{k}"), "product G2-structure", move || {
            let (phi, psi, _) = product_structure(&EhParams::new(a, t)?, &p)?;
            Ok(Outcome::below(theta(&phi)?.max_abs_diff(&psi), 1e-9))
        }));
        checks.push(Check::new(format!("eh.relation.{k}"), "fundamental relation and torsion", move || {
            let params = EhParams::new(a, t)?;
            let mut worst = 0.0f64;
            for h in [0.1, 0.05, 0.025] {
                worst = worst.max(product_relation_residual(&params, &p2, h * root)?);
            }
            let order = (product_torsion_fd(&params, &p2, 0.02 * root)? / product_torsion_fd(&params, &p2, 0.01 * root)?).log2();
            let o = Outcome::below(worst, 1e-11).with_note(format!("torsion order {order:.3}"));
            Ok(Outcome { passed: o.passed && order >= 1.9, ..o })
        }));
    }
    let radii: Vec<f64> = (0..=20).map(|i| 5.0 * root * 10f64.powf(i as f64 / 20.0)).collect();
    let (rows, _) = ale_decay(a, &radii)?;
    let table = Table {
        name: "eh_decay".into(),
        header: vec!["r", "max_abs_h_minus_identity"],
        rows: rows.iter().map(|(r, d)| vec![format!("{r:.6e}"), format!("{d:.6e}")]).collect(),
    };
    Ok((checks, vec![table]))
}

fn bump(center: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| {
        let x = r / center;
        if x > 1.0 && x < 2.0 {
            (-1.0 / ((x - 1.0) * (2.0 - x))).exp()
        } else {
            0.0
        }
    }
}

fn operator(a: f64, n: usize) -> Result<RadialOperator> {
    let s = a.sqrt();
    let grid = RadialGrid::log_spaced(1e-3 * s, 1e4 * s, n)?;
    Ok(RadialOperator::eguchi_hanson(a, grid, OuterBoundary::DecayRobin)?)
}

pub fn fibre(settings: &Settings) -> Result<Suite> {
    let (a, seed) = (settings.a, settings.seed);
    let gamma = settings.gamma_f64();
    let mut checks = vec![
        Check::new("fibre.zero_source", "trivial kernel", move || {
            let sol = solve_poisson(&operator(a, 400)?, &|_| 0.0, 0.25)?;
            Ok(Outcome::below(sol.max_abs(), 1e-10))
        }),
        Check::new("fibre.bump_far_field", "decay of harmonic far field", move || {
            let sol = solve_poisson(&operator(a, 1601)?, &bump(a.sqrt()), 0.25)?;
            Ok(Outcome::within(sol.tail_slope.unwrap_or(f64::NAN), -2.0, 0.1))
        }),
        Check::new("fibre.flat_oracle", "flat radial Green's function", || {
            let src = |r: f64| (-r * r).exp();
            let grid = RadialGrid::log_spaced(1e-3, 1e4, 3001)?;
            let op = RadialOperator::eguchi_hanson(1e-8, grid, OuterBoundary::DecayRobin)?;
            let sol = solve_poisson(&op, &src, 0.25)?;
            let mut worst = 0.0f64;
            for (r, u) in sol.r.iter().zip(&sol.u) {
                if (1e-2..=50.0).contains(r) {
                    let exact = flat_oracle(&src, *r, 1e3, 4000);
                    worst = worst.max(((u - exact) / exact).abs());
                }
            }
            Ok(Outcome::below(worst, 1e-3))
        }),
        Check::new("fibre.indicial_roots", "critical rates at infinity", move || {
            let roots = verify_rates(a)?.roots;
            let ok = (roots[0] + 2.0).abs() < 1e-3 && roots[1].abs() < 1e-12;
            let o = Outcome::exact(ok, true);
            Ok(Outcome { measured: json!(roots), expected: json!([-2.0, 0.0]), tolerance: Some(1e-3), ..o })
        }),
        Check::new("fibre.uniqueness", "uniqueness of decaying solutions", move || {
            let s = a.sqrt();
            let grid = RadialGrid::log_spaced(1e-2 * s, 1e2 * s, 200)?;
            let op = RadialOperator::eguchi_hanson(a, grid, OuterBoundary::DecayRobin)?;
            let src = move |r: f64| (1.0 + r * r / a).powf(-1.875);
            Ok(Outcome::below(uniqueness_gap(&op, &src, seed)?, 1e-10))
        }),
    ];
    checks.push(Check::new("fibre.decay_window", "decay of solutions for decaying sources", move || {
        let src = move |r: f64| (1.0 + r * r).powf((-4.0 + gamma) / 2.0) + 8.0 / gamma * (-r * r).exp();
        let sol = solve_poisson(&operator(a, 1601)?, &src, gamma)?;
        let s = sol.tail_slope.unwrap_or(f64::NAN);
        let ok = s >= -2.0 - 1e-9 && s <= -2.0 + gamma + 0.1;
        let o = Outcome::exact(ok, true).with_note(format!("window [-2, {}]", -2.0 + gamma + 0.1));
        Ok(Outcome { measured: json!(s), expected: json!(-2.0), ..o })
    }));
    let sol = solve_poisson(&operator(a, 801)?, &bump(a.sqrt()), 0.25)?;
    let table = Table {
        name: "fibre_bump".into(),
        header: vec!["r", "u"],
        rows: sol.r.iter().zip(&sol.u).map(|(r, u)| vec![format!("{r:.6e}"), format!("{u:.9e}")]).collect(),
    };
    Ok((checks, vec![table]))
}

fn region_id(r: Region) -> String {
    format!("r{}", r.index())
}

pub fn torsion(settings: &Settings) -> Result<Suite> {
    let table = torsion_table()?;
    let gamma = settings.gamma.clone();
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for region in Region::TABLE {
        for col in NormColumn::ALL {
            let got = table.cell(region, col).and_then(|c| c.exponent.clone());
            let want = reference_cell(region, col);
            let show = |e: &Option<g2glue::glue::Affine>| e.as_ref().map_or("0".to_string(), |x| x.to_string());
            let (g, w) = (show(&got), show(&want));
            rows.push(vec![
                region.index().to_string(),
                region.label().to_string(),
                col.label().to_string(),
                g.clone(),
                got.as_ref().map_or("none".to_string(), |x| format_rational(&x.at(&gamma))),
                (got == want).to_string(),
            ]);
            checks.push(Check::new(
                format!("table.{}.{}", region_id(region), col.label()),
                "torsion estimate per region",
                move || Ok(Outcome::exact(&g, &w)),
            ));
        }
    }
    let agg: Vec<String> = table.aggregate().iter().map(|a| a.to_string()).collect();
    checks.push(Check::new("table.aggregate", "dominant torsion exponents", move || {
        Ok(Outcome::exact(&agg, REFERENCE_AGGREGATE))
    }));
    let validity = table.aggregate_validity();
    let g = gamma.clone();
    checks.push(Check::new("table.gamma_range", "range of gamma keeping the aggregate", move || {
        let v = validity.clone().context("no crossing")?;
        let o = Outcome::exact(format_rational(&v), "5/9");
        Ok(Outcome { passed: o.passed && g < v, ..o }.with_note(format!("gamma {}", format_rational(&g))))
    }));
    checks.push(Check::new("table.alpha_window", "admissible alpha", || {
        Ok(Outcome::exact(format_rational(&alpha_window()?.sup), "1/18"))
    }));
    let csv = Table {
        name: "torsion_table".into(),
        header: vec!["region", "range", "norm", "exponent", "exponent_at_gamma", "matches_reference"],
        rows,
    };
    Ok((checks, vec![csv]))
}

pub fn alpha(exponents: Option<&str>) -> Result<Suite> {
    let check = match exponents {
        None => Check::new("alpha.window", "admissible alpha", || {
            let w = alpha_window()?;
            Ok(Outcome::exact(format_rational(&w.sup), "1/18"))
        }),
        Some(text) => {
            let parts: Vec<Rational> = text
                .split(',')
                .map(|p| parse_rational(p.trim()).with_context(|| format!("{p} is not a rational")))
                .collect::<Result<_>>()?;
            let [c0, l2, l14] = <[Rational; 3]>::try_from(parts).map_err(|_| anyhow::anyhow!("need three exponents"))?;
            Check::new("alpha.window", "admissible alpha", move || {
                let w = alpha_window_from(&c0, &l2, &l14);
                Ok(Outcome::info(json!({"sup": format_rational(&w.sup), "empty": w.empty})))
            })
        }
    };
    Ok((vec![check], Vec::new()))
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

pub fn betti_examples(name: &str) -> Result<Suite> {
    let names: Vec<&str> = if name == "all" {
        PRESETS.to_vec()
    } else if PRESETS.contains(&name) {
        vec![name]
    } else {
        bail!("unknown example {name}; expected one of {PRESETS:?} or all");
    };
    let mut checks = Vec::new();
    for n in names {
        let rep = preset(n)?;
        for c in &rep.checks {
            let (m, e) = (c.computed.clone(), c.expected.clone());
            checks.push(Check::new(format!("betti.{n}.{}", slug(&c.label)), "worked example", move || {
                Ok(Outcome::exact(&m, &e))
            }));
        }
        let result = rep.result.clone();
        let notes = rep.diagnostics.join("; ");
        checks.push(Check::new(format!("betti.{n}.result"), "Betti numbers of the resolution", move || {
            let o = Outcome::exact(result.poincare_dual(), true);
            let o = Outcome { measured: json!(result.as_slice()), expected: json!("Poincare dual"), ..o };
            Ok(if notes.is_empty() { o } else { o.with_note(notes.clone()) })
        }));
    }
    Ok((checks, Vec::new()))
}

#[derive(Deserialize)]
struct GeneratorInput {
    matrix: Vec<Vec<i64>>,
    shift: Vec<String>,
}

#[derive(Deserialize)]
struct BettiInput {
    generators: Vec<GeneratorInput>,
    singular: Option<Vec<i64>>,
    twisted: Option<Vec<i64>>,
    expected: Option<Vec<i64>>,
}

pub fn betti_input(path: &Path) -> Result<Suite> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let input: BettiInput = serde_json::from_str(&text).context("parsing Betti input")?;
    let mut gens = Vec::new();
    for g in &input.generators {
        let n = g.matrix.len();
        if g.matrix.iter().any(|row| row.len() != n) {
            bail!("generator matrix is not square");
        }
        let lin = Mat::from_fn(n, n, |i, j| Rational::from_i64(g.matrix[i][j]));
        let shift: Vec<Rational> = g
            .shift
            .iter()
            .map(|s| parse_rational(s).with_context(|| format!("{s} is not a rational")))
            .collect::<Result<_>>()?;
        gens.push(AffineMap::new(lin, shift)?);
    }
    let action = AffineAction::generate(&gens)?;
    let quotient = action.invariant_betti_all()?;
    let mut checks = Vec::new();
    let order = action.order();
    let q = quotient.clone();
    checks.push(Check::new("betti.input.quotient", "invariant cohomology of the torus", move || {
        Ok(Outcome::info(json!({"group_order": order, "betti": q.as_slice()})))
    }));
    if let Ok(orbits) = fixed_orbits(&action) {
        let summary: Vec<_> = orbits
            .iter()
            .map(|o| json!({"element": o.element, "orbit": o.size, "stabilizer": o.stabilizer.len(), "free": o.free_coords}))
            .collect();
        checks.push(Check::new("betti.input.fixed_orbits", "fixed components up to the action", move || {
            Ok(Outcome::info(&summary))
        }));
    }
    if let Some(l) = input.singular {
        let singular = BettiVector::new(l)?;
        let twisted = input.twisted.map(BettiVector::new).transpose()?;
        let n = resolve_betti(&quotient, &singular, twisted.as_ref())?;
        let expected = input.expected;
        checks.push(Check::new("betti.input.result", "Betti numbers of the resolution", move || {
            Ok(match &expected {
                Some(e) => Outcome::exact(n.as_slice(), e),
                None => {
                    let o = Outcome::exact(n.poincare_dual(), true);
                    Outcome { measured: json!(n.as_slice()), expected: json!("Poincare dual"), ..o }
                }
            })
        }));
    }
    Ok((checks, Vec::new()))
}

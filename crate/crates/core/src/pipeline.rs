//! End-to-end runs behind each subcommand. Every run returns the artifact
//! bytes and an outcome; writing files is left to the caller.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifact::{read_header, sha256_hex, ArtifactKind, Envelope, FORMAT_VERSION};
use crate::cauchy::{lifetime_run, InitialData, LifetimeOptions, LifetimeReport};
use crate::characteristics::{
    connected_components, diophantine_profile, enumerate_characteristics, verify_prop2_bound, Adjacency, CharBox,
    CharacteristicSet, ComponentReport, DiophantineProfile, Prop2Check,
};
use crate::config::{GenericityModeName, LoadedConfig};
use crate::genericity::{build_gamma, certify, nongeneric_measure_estimate, GenericityCertificate, Verdict};
use crate::operator::{
    assemble_a0, assemble_fprime_n, block_gap, gap_prop3, measure_estimate_prop1, restrict_pa0p, GapReport, OpBox,
    Prop3Report,
};
use crate::solver::{
    reverify, solve, time_domain_residual, transversality, NewtonBox, SolutionArtifact, SolveOptions,
    TransversalityReport,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Success,
    /// A verified negative result (exit status 2).
    Negative(String),
}

/// One emitted file. `name` is empty for the primary artifact; otherwise it
/// replaces the extension of the primary path.
#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    pub name: String,
    pub kind: ArtifactKind,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub files: Vec<Emitted>,
    pub outcome: Outcome,
    pub config_hash: String,
    pub rng_seed: u64,
}

fn primary(kind: ArtifactKind, text: String) -> Emitted {
    Emitted {
        name: String::new(),
        kind,
        bytes: text.into_bytes(),
    }
}

fn extra(name: &str, kind: ArtifactKind, text: String) -> Emitted {
    Emitted {
        name: name.to_string(),
        kind,
        bytes: text.into_bytes(),
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Holds { tested: 0 } => "vacuous (nothing to test)".to_string(),
        Verdict::Holds { tested } => format!("holds ({tested} tested)"),
        Verdict::Fails { witness, .. } => format!(
            "fails: {} = {} at {:?}",
            witness.quantity, witness.value, witness.elements
        ),
        Verdict::PartiallyVerified { tested, coverage, .. } => {
            format!("partially verified ({tested} tested, coverage {coverage:.3e})")
        }
    }
}

pub fn run_genericity(
    cfg: &LoadedConfig,
    mode: Option<GenericityModeName>,
    samples: Option<u64>,
    rng_seed: Option<u64>,
) -> Result<RunOutput> {
    let seed = cfg.config.seed()?;
    let rng = rng_seed.unwrap_or(cfg.config.rng_seed);
    let opts = cfg.config.genericity_options(mode.clone(), samples, Some(rng));
    let cert = certify(&seed, &opts)?;
    let outcome = if cert.is_generic() {
        Outcome::Success
    } else {
        let v = [&cert.condition_i, &cert.condition_ii, &cert.condition_iii]
            .into_iter()
            .find(|v| v.is_fail())
            .map(verdict_text)
            .unwrap_or_default();
        Outcome::Negative(format!("genericity refuted: {v}"))
    };
    let env = Envelope::new(
        ArtifactKind::Certificate,
        &cfg.hash,
        rng,
        json!({ "mode": mode, "samples": samples }),
        cert,
    );
    Ok(RunOutput {
        files: vec![primary(ArtifactKind::Certificate, env.to_json()?)],
        outcome,
        config_hash: cfg.hash.clone(),
        rng_seed: rng,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharsetPayload {
    pub characteristics: CharacteristicSet,
    pub components: ComponentReport,
    pub prop2: Prop2Check,
    pub profile: Option<DiophantineProfile>,
    pub profile_error: Option<String>,
}

pub fn run_charset(cfg: &LoadedConfig, box_n: Option<i64>, box_j: Option<i64>) -> Result<RunOutput> {
    let seed = cfg.config.seed()?;
    let bx = CharBox::new(
        box_n.unwrap_or(cfg.config.boxes.char_n),
        box_j.unwrap_or(cfg.config.boxes.char_j),
    )?;
    let cs = enumerate_characteristics(&seed, bx)?;
    let comps = connected_components(&cs, &build_gamma(&seed), Adjacency::GammaStep, seed.bound_b());
    let prop2 = verify_prop2_bound(&comps);
    let (profile, profile_error) = match diophantine_profile(&seed, bx) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let outcome = if prop2.holds {
        Outcome::Success
    } else {
        Outcome::Negative(format!(
            "component of size {} exceeds B = {}",
            prop2.max_size, prop2.bound_b
        ))
    };
    let csv = profile.as_ref().map(DiophantineProfile::to_csv);
    let payload = CharsetPayload {
        characteristics: cs,
        components: comps,
        prop2,
        profile,
        profile_error,
    };
    let env = Envelope::new(
        ArtifactKind::Charset,
        &cfg.hash,
        cfg.config.rng_seed,
        json!({ "box_n": bx.n_l1, "box_j": bx.j_inf }),
        payload,
    );
    let mut files = vec![primary(ArtifactKind::Charset, env.to_json()?)];
    if let Some(csv) = csv {
        files.push(extra("diophantine.csv", ArtifactKind::Charset, csv));
    }
    Ok(RunOutput {
        files,
        outcome,
        config_hash: cfg.hash.clone(),
        rng_seed: cfg.config.rng_seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPayload {
    pub block_gap: GapReport<f64>,
    pub truncated: Prop3Report,
    pub block_count: usize,
    pub largest_block: usize,
    /// Hermitian defect of `diag(D)·A`.
    pub hermitian_defect: f64,
}

pub fn run_gap(cfg: &LoadedConfig, n: Option<i64>, delta: Option<f64>, eps: Option<f64>) -> Result<RunOutput> {
    let c = &cfg.config;
    let seed = c.seed_with_delta(delta)?;
    let eps = eps.unwrap_or(c.tolerances.epsilon);
    if !(eps > 0.0) {
        return Err(Error::config("--eps", "must be positive"));
    }
    let n = n.unwrap_or(c.boxes.op_n);
    if n < 1 {
        return Err(Error::config("--N", "must be >= 1"));
    }
    let cbx = CharBox::new(c.boxes.char_n, c.boxes.char_j)?;
    let cs = enumerate_characteristics(&seed, cbx)?;
    let blocks = restrict_pa0p(&assemble_a0::<f64>(&seed)?, &cs);
    let bg = block_gap(&blocks, eps, seed.delta(), seed.p());
    let nl = cfg.nonlinearity()?;
    let op = assemble_fprime_n(&seed, &seed.omega0_f64(), OpBox { n_l1: n, j_inf: c.boxes.op_j }, &nl, None)?;
    let profile = diophantine_profile(&seed, cbx)?;
    let truncated = gap_prop3(&op, seed.p(), seed.delta(), eps, &profile, c.tolerances.smallness)?;
    let outcome = match (bg.pass, truncated.pass) {
        (true, true) => Outcome::Success,
        (false, _) => Outcome::Negative(format!(
            "block gap fails: inverse norm {:.4e} > bound {:.4e}",
            bg.inverse_norm, bg.bound
        )),
        (_, false) => Outcome::Negative(format!(
            "truncated gap fails: inverse norm {:.4e} > bound {:.4e}",
            truncated.inverse_norm, truncated.bound
        )),
    };
    let payload = GapPayload {
        block_count: blocks.len(),
        largest_block: blocks.iter().map(|b| b.rows.len()).max().unwrap_or(0),
        hermitian_defect: op.conv_hermitian_defect(),
        block_gap: bg,
        truncated,
    };
    let env = Envelope::new(
        ArtifactKind::Gap,
        &cfg.hash,
        c.rng_seed,
        json!({ "N": n, "delta": seed.delta(), "eps": eps }),
        payload,
    );
    Ok(RunOutput {
        files: vec![primary(ArtifactKind::Gap, env.to_json()?)],
        outcome,
        config_hash: cfg.hash.clone(),
        rng_seed: c.rng_seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta: f64,
    pub converged: bool,
    pub frequency_shift: Vec<f64>,
    pub remainder_norm: f64,
    pub remainder_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvePayload {
    pub certificate_hash: String,
    pub certificate_status: String,
    pub solution: Option<SolutionArtifact<f64>>,
    pub residual_reverified: Option<f64>,
    pub time_domain_residual: Option<f64>,
    pub scaling: Vec<ScalingRow>,
    pub transversality: Option<TransversalityReport>,
}

fn solve_options(cfg: &LoadedConfig, tol: Option<f64>, max_iter: Option<usize>) -> Result<SolveOptions> {
    let c = &cfg.config;
    let bx = match (c.boxes.newton_n, c.boxes.newton_j) {
        (Some(n), Some(j)) => Some(NewtonBox::new(n, j)?),
        (None, None) => None,
        _ => return Err(Error::config("boxes.newton_n", "set newton_n and newton_j together")),
    };
    Ok(SolveOptions {
        tol: tol.unwrap_or(c.tolerances.solve_tol),
        max_iter: max_iter.unwrap_or(c.tolerances.max_iter),
        bx,
        grow_to: c.boxes.newton_grow_to,
        rho: c.tolerances.rho,
    })
}

/// Solves at `delta`, plus the `δ/2`, `δ/4` scaling companions. Without a
/// certificate the genericity check runs first.
pub fn run_solve(
    cfg: &LoadedConfig,
    delta: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    certificate: Option<&str>,
) -> Result<RunOutput> {
    let c = &cfg.config;
    let seed = c.seed_with_delta(delta)?;
    let (cert_json, cert): (String, GenericityCertificate) = match certificate {
        Some(text) => {
            let env: Envelope<GenericityCertificate> = Envelope::from_json(text)?;
            if env.kind != ArtifactKind::Certificate {
                return Err(Error::Artifact("--certificate is not a genericity certificate".into()));
            }
            if env.config_hash != cfg.hash {
                return Err(Error::Artifact("certificate was produced from a different config".into()));
            }
            (text.to_string(), env.payload)
        }
        None => {
            let out = run_genericity(cfg, None, None, None)?;
            let text = String::from_utf8(out.files[0].bytes.clone()).map_err(|e| Error::Artifact(e.to_string()))?;
            let env: Envelope<GenericityCertificate> = Envelope::from_json(&text)?;
            (text, env.payload)
        }
    };
    let cert_hash = sha256_hex(cert_json.as_bytes());
    let status = if cert.fully_certified() {
        "generic"
    } else if cert.is_generic() {
        "partially verified"
    } else {
        "refuted"
    };
    let params = json!({ "delta": seed.delta(), "tol": tol, "max_iter": max_iter });
    let mut payload = SolvePayload {
        certificate_hash: cert_hash.clone(),
        certificate_status: status.to_string(),
        solution: None,
        residual_reverified: None,
        time_domain_residual: None,
        scaling: Vec::new(),
        transversality: None,
    };
    let outcome;
    let mut files = Vec::new();
    if !cert.is_generic() {
        outcome = Outcome::Negative("genericity refuted; not solving".into());
    } else {
        let nl = cfg.nonlinearity()?;
        let opts = solve_options(cfg, tol, max_iter)?;
        let mut art = solve(&seed, &nl, &opts)?;
        art.certificate_hash = Some(cert_hash);
        art.certificate_status = Some(status.to_string());
        payload.residual_reverified = Some(reverify(&art, &nl)?);
        if nl.h_terms.is_empty() {
            payload.time_domain_residual = Some(time_domain_residual(&art, 64, 64)?);
        }
        let d0 = seed.delta();
        for d in [d0, d0 / 2.0, d0 / 4.0] {
            let s = seed.with_amplitudes(seed.amplitudes().iter().map(|a| a / d0 * d).collect())?;
            let sub = if d == d0 { art.clone() } else { solve(&s, &nl, &SolveOptions { bx: None, ..opts.clone() })? };
            payload.scaling.push(ScalingRow {
                delta: d,
                converged: sub.converged,
                frequency_shift: sub.omega_shift.clone(),
                remainder_norm: sub.remainder_norm,
                remainder_bound: sub.remainder_bound,
            });
        }
        payload.transversality = Some(transversality(&seed, &nl, &[d0, d0 / 2.0, d0 / 4.0])?);
        let mut hist = String::from("iteration,residual,omega\n");
        for (i, r) in art.history.iter().enumerate() {
            let w = art.omega_history.get(i).map(|w| {
                w.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ")
            });
            hist.push_str(&format!("{i},{r:e},{}\n", w.unwrap_or_default()));
        }
        let mut scal = String::from("delta,converged,max_frequency_shift,remainder_norm,remainder_bound\n");
        for r in &payload.scaling {
            let s = r.frequency_shift.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            scal.push_str(&format!("{:e},{},{:e},{:e},{:e}\n", r.delta, r.converged, s, r.remainder_norm, r.remainder_bound));
        }
        files.push(extra("residuals.csv", ArtifactKind::Solution, hist));
        files.push(extra("scaling.csv", ArtifactKind::Solution, scal));
        outcome = if art.converged {
            Outcome::Success
        } else {
            Outcome::Negative(art.failure.clone().unwrap_or_else(|| "not converged".into()))
        };
        payload.solution = Some(art);
    }
    let env = Envelope::new(ArtifactKind::Solution, &cfg.hash, c.rng_seed, params, payload);
    files.insert(0, primary(ArtifactKind::Solution, env.to_json()?));
    Ok(RunOutput {
        files,
        outcome,
        config_hash: cfg.hash.clone(),
        rng_seed: c.rng_seed,
    })
}

/// Primary output is the CSV; the full report goes to the `json` sibling.
/// The seed profile is normalized to unit size; `delta` weights the
/// nonlinearity instead.
pub fn run_evolve(cfg: &LoadedConfig, delta: Option<f64>, a_exp: Option<f64>) -> Result<RunOutput> {
    let c = &cfg.config;
    let seed = c.seed()?;
    let scale = seed.delta();
    let seed = seed.with_amplitudes(seed.amplitudes().iter().map(|a| a / scale).collect())?;
    let delta = delta.unwrap_or(c.evolve.delta);
    let a_exp = a_exp.unwrap_or(c.evolve.a_exp);
    if !(delta >= 0.0) || !(a_exp > 0.0) {
        return Err(Error::config("--delta/--A", "need delta >= 0 and A > 0"));
    }
    let opts = LifetimeOptions {
        m: c.evolve.grid,
        dt: c.evolve.dt,
        rho: c.tolerances.rho,
        k: c.evolve.k,
        checkpoints: c.evolve.checkpoints,
    };
    let t_final = if delta == 0.0 { Some(0.02f64.powf(-a_exp)) } else { None };
    let rep: LifetimeReport = lifetime_run(&InitialData::from_seed(&seed), delta, seed.p(), a_exp, t_final, &opts)?;
    let outcome = if rep.pass {
        Outcome::Success
    } else {
        Outcome::Negative(match rep.blowup_time {
            Some(t) => format!("blow-up at t = {t}"),
            None => format!("excess norm {:.4e} > {:.4e}", rep.max_excess, rep.threshold),
        })
    };
    let csv = rep.to_csv();
    let env = Envelope::new(
        ArtifactKind::Lifetime,
        &cfg.hash,
        c.rng_seed,
        json!({ "delta": delta, "A": a_exp }),
        rep,
    );
    Ok(RunOutput {
        files: vec![
            primary(ArtifactKind::Lifetime, csv),
            extra("json", ArtifactKind::Lifetime, env.to_json()?),
        ],
        outcome,
        config_hash: cfg.hash.clone(),
        rng_seed: c.rng_seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurePayload {
    pub block_gap_fraction: Vec<(f64, f64)>,
    pub fraction_nondecreasing: bool,
    pub samples: u64,
    pub a_inf: f64,
    pub nongeneric_fraction: f64,
    pub site_box: f64,
    pub threshold: f64,
}

pub fn run_measure(cfg: &LoadedConfig, samples: Option<u64>, rng_seed: Option<u64>) -> Result<RunOutput> {
    let c = &cfg.config;
    let m = &c.measure;
    let samples = samples.unwrap_or(m.samples);
    let rng = rng_seed.unwrap_or(c.rng_seed);
    let seed = c.seed()?;
    let cs = enumerate_characteristics(&seed, CharBox::new(c.boxes.char_n, c.boxes.char_j)?)?;
    let mut fractions = Vec::new();
    for &eps in &m.epsilons {
        fractions.push((eps, measure_estimate_prop1(&seed, &cs, eps, m.a_inf, samples, rng)?));
    }
    let mut by_eps = fractions.clone();
    by_eps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let nondecreasing = by_eps.windows(2).all(|w| w[1].1 >= w[0].1);
    let ng = nongeneric_measure_estimate(seed.d(), seed.b(), seed.p(), samples, rng, m.site_box, m.threshold)?;
    let payload = MeasurePayload {
        block_gap_fraction: fractions,
        fraction_nondecreasing: nondecreasing,
        samples,
        a_inf: m.a_inf,
        nongeneric_fraction: ng,
        site_box: m.site_box,
        threshold: m.threshold,
    };
    let env = Envelope::new(ArtifactKind::Measure, &cfg.hash, rng, json!({ "samples": samples }), payload);
    Ok(RunOutput {
        files: vec![primary(ArtifactKind::Measure, env.to_json()?)],
        outcome: Outcome::Success,
        config_hash: cfg.hash.clone(),
        rng_seed: rng,
    })
}

/// The summary text and plot CSVs built from a set of artifacts.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub summary: String,
    pub csvs: Vec<(String, String)>,
    pub config_hash: String,
}

fn parse<P: serde::de::DeserializeOwned>(text: &str) -> Result<Envelope<P>> {
    Envelope::from_json(text)
}

/// Cross-links the artifacts of one pipeline. Refuses inputs whose config
/// hashes or format versions differ, and marks missing sections absent.
pub fn emit_report(artifacts: &[(String, String)]) -> Result<Report> {
    if artifacts.is_empty() {
        return Err(Error::Artifact("no artifacts given".into()));
    }
    let mut hash: Option<String> = None;
    let mut by_kind: std::collections::BTreeMap<ArtifactKind, (&str, &str)> = Default::default();
    for (name, text) in artifacts {
        let h = read_header(text).map_err(|e| Error::Artifact(format!("{name}: {e}")))?;
        if h.format_version != FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "{name}: format version {} differs from {FORMAT_VERSION}",
                h.format_version
            )));
        }
        match &hash {
            None => hash = Some(h.config_hash.clone()),
            Some(prev) if *prev != h.config_hash => {
                return Err(Error::Artifact(format!("{name}: config hash differs from the other artifacts")));
            }
            _ => {}
        }
        if by_kind.insert(h.kind, (name, text)).is_some() {
            return Err(Error::Artifact(format!("{name}: duplicate {} artifact", h.kind.label())));
        }
    }
    let hash = hash.unwrap_or_default();
    let mut out = String::new();
    let mut csvs = Vec::new();
    out.push_str("# hyperwave report\n\n");
    out.push_str(&format!("config hash: `{hash}`\nformat version: {FORMAT_VERSION}\n\n"));
    let absent = |out: &mut String, title: &str| out.push_str(&format!("## {title}\n\nabsent\n\n"));

    match by_kind.get(&ArtifactKind::Certificate) {
        Some((name, text)) => {
            let env: Envelope<GenericityCertificate> = parse(text)?;
            let c = &env.payload;
            out.push_str(&format!("## Genericity certificate ({name})\n\n"));
            out.push_str(&format!("- sites: {:?}, p = {}\n", c.seed.sites, c.seed.p));
            out.push_str(&format!("- B = {}, |Γ| = {}, |𝒜| = {}\n", c.bound_b, c.gamma_size, c.algebra_size));
            out.push_str(&format!("- condition (i): {}\n", verdict_text(&c.condition_i)));
            out.push_str(&format!("- condition (ii): {}\n", verdict_text(&c.condition_ii)));
            out.push_str(&format!("- condition (iii): {}\n\n", verdict_text(&c.condition_iii)));
        }
        None => absent(&mut out, "Genericity certificate"),
    }
    match by_kind.get(&ArtifactKind::Charset) {
        Some((name, text)) => {
            let env: Envelope<CharsetPayload> = parse(text)?;
            let p = &env.payload;
            out.push_str(&format!("## Characteristic components ({name})\n\n"));
            out.push_str(&format!(
                "- |𝒞₊| = {}, |𝒞₋| = {} in box ‖n‖₁ ≤ {}, ‖j‖∞ ≤ {}\n",
                p.characteristics.plus.len(),
                p.characteristics.minus.len(),
                p.characteristics.bx.n_l1,
                p.characteristics.bx.j_inf
            ));
            out.push_str(&format!(
                "- {} components, max size {} (B = {}): {}\n",
                p.components.components.len(),
                p.prop2.max_size,
                p.prop2.bound_b,
                if p.prop2.holds { "bound holds" } else { "bound violated" }
            ));
            match &p.profile {
                Some(prof) => {
                    out.push_str(&format!("- Diophantine exponent q = {:.4}, c′ = {:.4e}\n\n", prof.q, prof.cprime));
                    csvs.push(("diophantine_profile.csv".to_string(), prof.to_csv()));
                }
                None => out.push_str("- Diophantine profile unavailable\n\n"),
            }
        }
        None => absent(&mut out, "Characteristic components"),
    }
    match by_kind.get(&ArtifactKind::Gap) {
        Some((name, text)) => {
            let env: Envelope<GapPayload> = parse(text)?;
            let g = &env.payload;
            out.push_str(&format!("## Spectral gap ({name})\n\n"));
            out.push_str(&format!(
                "- blocks: {} (largest {}), max ‖B⁻¹‖ = {:.4e} vs bound {:.4e}: {}\n",
                g.block_count,
                g.largest_block,
                g.block_gap.inverse_norm,
                g.block_gap.bound,
                if g.block_gap.pass { "pass" } else { "fail" }
            ));
            out.push_str(&format!(
                "- truncated N = {}: ‖(F′_N)⁻¹‖ = {:.4e} vs bound {:.4e}: {}\n\n",
                g.truncated.n,
                g.truncated.inverse_norm,
                g.truncated.bound,
                if g.truncated.pass { "pass" } else { "fail" }
            ));
        }
        None => absent(&mut out, "Spectral gap"),
    }
    match by_kind.get(&ArtifactKind::Solution) {
        Some((name, text)) => {
            let env: Envelope<SolvePayload> = parse(text)?;
            let p = &env.payload;
            out.push_str(&format!("## Quasi-periodic solution ({name})\n\n"));
            out.push_str(&format!("- certificate: {} (`{}`)\n", p.certificate_status, p.certificate_hash));
            match &p.solution {
                Some(s) => {
                    out.push_str(&format!(
                        "- converged: {} after {} iterations, residual {:.3e}\n- ω = {:?}\n- remainder {:.3e} (bound δ^1.5 = {:.3e})\n",
                        s.converged, s.iterations, s.residual, s.omega, s.remainder_norm, s.remainder_bound
                    ));
                    let mut hist = String::from("iteration,residual\n");
                    for (i, r) in s.history.iter().enumerate() {
                        hist.push_str(&format!("{i},{r:e}\n"));
                    }
                    csvs.push(("residual_history.csv".to_string(), hist));
                }
                None => out.push_str("- no solution (genericity refuted)\n"),
            }
            if let Some(t) = &p.transversality {
                out.push_str(&format!(
                    "- transversality slope {:?} (expected {}), unrescaled {:?}\n",
                    t.slope, t.expected_slope, t.slope_unrescaled
                ));
            }
            out.push('\n');
            let mut scal = String::from("delta,max_frequency_shift,remainder_norm\n");
            for r in &p.scaling {
                let s = r.frequency_shift.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                scal.push_str(&format!("{:e},{:e},{:e}\n", r.delta, s, r.remainder_norm));
            }
            csvs.push(("delta_scaling.csv".to_string(), scal));
        }
        None => absent(&mut out, "Quasi-periodic solution"),
    }
    match by_kind.get(&ArtifactKind::Lifetime) {
        Some((name, text)) => {
            let env: Envelope<LifetimeReport> = parse(text)?;
            let r = &env.payload;
            out.push_str(&format!("## Lifetime run ({name})\n\n"));
            out.push_str(&format!(
                "- δ = {}, T = {:.2}, max excess {:.4e} (threshold {:.4e}): {}\n- energy drift {:.3e}\n\n",
                r.delta,
                r.t_final,
                r.max_excess,
                r.threshold,
                if r.pass { "pass" } else { "fail" },
                r.max_energy_drift
            ));
            let mut csv = String::from("t,excess\n");
            for row in &r.rows {
                csv.push_str(&format!("{:e},{:e}\n", row.t, row.excess));
            }
            csvs.push(("lifetime_excess.csv".to_string(), csv));
        }
        None => absent(&mut out, "Lifetime run"),
    }
    if let Some((name, text)) = by_kind.get(&ArtifactKind::Measure) {
        let env: Envelope<MeasurePayload> = parse(text)?;
        let m = &env.payload;
        out.push_str(&format!("## Measure estimates ({name})\n\n"));
        for (eps, f) in &m.block_gap_fraction {
            out.push_str(&format!("- ε = {eps}: block gap pass fraction {f:.4}\n"));
        }
        out.push_str(&format!("- non-generic site fraction {:.4e}\n\n", m.nongeneric_fraction));
    }
    Ok(Report {
        summary: out,
        csvs,
        config_hash: hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn pell() -> LoadedConfig {
        LoadedConfig::from_str_in(
            "[seed]\np = 2\nsites = [[1]]\namplitudes = [0.01]\n[measure]\nsamples = 200\n",
            Path::new("."),
        )
        .unwrap()
    }

    fn text(o: &RunOutput) -> String {
        String::from_utf8(o.files[0].bytes.clone()).unwrap()
    }

    #[test]
    fn pell_pipeline() {
        let cfg = pell();
        let g = run_genericity(&cfg, None, None, None).unwrap();
        assert_eq!(g.outcome, Outcome::Success);
        let c = run_charset(&cfg, None, None).unwrap();
        assert_eq!(c.outcome, Outcome::Success);
        let s = run_solve(&cfg, None, None, None, Some(&text(&g))).unwrap();
        assert_eq!(s.outcome, Outcome::Success);
        let rep = emit_report(&[("cert.json".into(), text(&g)), ("charset.json".into(), text(&c)), ("solution.json".into(), text(&s))]).unwrap();
        assert!(rep.summary.contains("## Lifetime run\n\nabsent"));
        assert!(rep.summary.contains("condition (ii): vacuous"));
        assert!(rep.csvs.iter().any(|(n, _)| n == "residual_history.csv"));
        // determinism
        assert_eq!(run_solve(&cfg, None, None, None, Some(&text(&g))).unwrap(), s);
    }

    #[test]
    fn report_refuses_mixed_hashes() {
        let a = run_genericity(&pell(), None, None, None).unwrap();
        let other = LoadedConfig::from_str_in("[seed]\np = 2\nsites = [[2]]\namplitudes = [0.01]\n", Path::new(".")).unwrap();
        let b = run_charset(&other, Some(10), Some(10)).unwrap();
        assert!(emit_report(&[("a".into(), text(&a)), ("b".into(), text(&b))]).is_err());
    }
}

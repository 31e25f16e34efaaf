//! One function per subcommand. Each validates its parameters, runs the
//! library, and returns in-memory artifacts plus a JSON summary.

use clap::Args;
use ergokit::complexity::{entropy_estimate, katok_entropy, mdim_from_fits, pressure_estimate, PressureEstimate};
use ergokit::gluing::{
    approximate_by_periodic_measure, build_periodic_net, glue, glue_periodic, gluing_from_shadowing, shadow, NetClass,
    SegmentSpec,
};
use ergokit::historic::schedule::polyline_distance;
use ergokit::historic::{
    build_fractal_family, build_schedule, construct_wild_point, empirical_extremes, entropy_lower_certificate,
    verify_fractal_is_historic, verify_oscillation, FractalParams,
};
use ergokit::observables::{accumulation_set, geometric_checkpoints};
use ergokit::rotation::{estimate_rotation_set, rotation_number};
use ergokit::seeding::stream_seed;
use ergokit::systems::chain_recurrence;
use ergokit::{MetricPoint, Observable, System};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::catalog::Catalog;
use crate::output::{join, num, plane, Svg, Table};
use crate::parse;
use crate::{Command, Failure, Outcome};

type Result<T> = std::result::Result<T, Failure>;

fn cfg(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn require(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(cfg(msg))
    }
}

fn lift_of<'a>(sys: &'a System, what: &str) -> Result<&'a ergokit::TorusLift> {
    sys.as_lift()
        .ok_or_else(|| Failure::Unsupported(format!("{what} needs a torus lift")))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RotsetArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value_t = 64)]
    pub seeds: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Periodic orbits up to this period join the cloud.
    #[arg(long, default_value_t = 8)]
    pub period_budget: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RotnumArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value = "0")]
    pub x: String,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PointwiseArgs {
    #[arg(long)]
    pub system: String,
    /// Catalog observable; defaults to the rotation observable of the system.
    #[arg(long)]
    pub obs: Option<String>,
    /// Torus coordinates `x,y` or a symbol point `prefix|tail`.
    #[arg(long)]
    pub point: String,
    #[arg(long, default_value_t = 100_000)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long)]
    pub system: String,
    /// Scales, e.g. `2^-3..2^-6`.
    #[arg(long, default_value = "2^-3..2^-6")]
    pub eps: String,
    /// Orbit lengths, e.g. `6..14`.
    #[arg(long, default_value = "6..14")]
    pub n: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PressureArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// Catalog observable used as the potential.
    #[arg(long)]
    pub psi: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KatokArgs {
    #[arg(long)]
    pub system: String,
    /// `bernoulli:p` or `dirac:<word>`.
    #[arg(long)]
    pub measure: String,
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long, default_value = "0.1")]
    pub gamma: String,
    #[arg(long, default_value = "2^-1..2^-2")]
    pub eps: String,
    #[arg(long, default_value = "5..11")]
    pub n: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChainrecArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value_t = 64)]
    pub boxes: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlueArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value = "2^-2")]
    pub eps: String,
    /// Repeatable `point:length`.
    #[arg(long = "segment", required = true)]
    pub segments: Vec<String>,
    /// Close the glued orbit into a periodic one.
    #[arg(long)]
    pub periodic: bool,
    /// Glue through a periodic net at this δ instead of the direct oracle.
    #[arg(long)]
    pub net_delta: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShadowArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value = "1e-3")]
    pub delta: String,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 100)]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NetArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value = "2^-3")]
    pub delta: String,
    /// Restrict to a chain class (index into `chainrec` components).
    #[arg(long)]
    pub component: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub boxes: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PermeasureArgs {
    #[arg(long)]
    pub system: String,
    /// `dirac:0=0.5;dirac:1=0.5` or `bernoulli:0.3=1`.
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "0.05")]
    pub zeta: String,
    /// Cylinder basis depth.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WildArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long)]
    pub obs: String,
    /// Polyline vertices: `0.1,0.9`, or `0.2,0.2;0.6,0.2;...` in the plane.
    #[arg(long)]
    pub delta: String,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value = "2^-1")]
    pub eps: String,
    /// Base point the construction starts near.
    #[arg(long, default_value = "0")]
    pub base: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FractalArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long)]
    pub obs: String,
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value = "2^-3")]
    pub eps: String,
    #[arg(long, default_value = "0.01")]
    pub gamma: String,
    #[arg(long, default_value = "0.9")]
    pub t: String,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Defaults to the Bernoulli equilibrium state of ψ.
    #[arg(long)]
    pub mu1: Option<String>,
    #[arg(long, default_value = "dirac:0")]
    pub nu: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 48)]
    pub representatives: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AcceptArgs {
    /// Comma list of criterion numbers; all when absent.
    #[arg(long)]
    pub only: Option<String>,
}

/// Command parameters as they appear in the manifest.
pub fn params_of(cmd: &Command) -> serde_json::Value {
    match cmd {
        Command::Rotset(a) => json!(a),
        Command::Rotnum(a) => json!(a),
        Command::Pointwise(a) => json!(a),
        Command::Entropy(a) | Command::Mdim(a) => json!(a),
        Command::Pressure(a) => json!(a),
        Command::Katok(a) => json!(a),
        Command::Chainrec(a) => json!(a),
        Command::Glue(a) => json!(a),
        Command::Shadow(a) => json!(a),
        Command::Net(a) => json!(a),
        Command::Permeasure(a) => json!(a),
        Command::Wild(a) => json!(a),
        Command::Fractal(a) | Command::Certify(a) => json!(a),
        Command::Accept(a) => json!(a),
    }
}

pub fn dispatch(cmd: &Command, cat: &Catalog) -> Result<Outcome> {
    match cmd {
        Command::Rotset(a) => rotset(a, cat),
        Command::Rotnum(a) => rotnum(a, cat),
        Command::Pointwise(a) => pointwise(a, cat),
        Command::Entropy(a) => entropy(a, cat),
        Command::Pressure(a) => pressure(a, cat),
        Command::Mdim(a) => mdim(a, cat),
        Command::Katok(a) => katok(a, cat),
        Command::Chainrec(a) => chainrec(a, cat),
        Command::Glue(a) => glue_cmd(a, cat),
        Command::Shadow(a) => shadow_cmd(a, cat),
        Command::Net(a) => net(a, cat),
        Command::Permeasure(a) => permeasure(a, cat),
        Command::Wild(a) => wild(a, cat),
        Command::Fractal(a) => fractal(a, cat, false),
        Command::Certify(a) => fractal(a, cat, true),
        Command::Accept(a) => accept(a, cat),
    }
}

pub fn rotset(a: &RotsetArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    require(a.seeds >= 1 && a.seeds <= 1 << 16, "--seeds must be in 1..=65536")?;
    require(a.n >= 1000 && a.n <= 100_000_000, "--n must be in 1000..=1e8")?;
    let est = estimate_rotation_set(sys, a.seeds, a.n, a.seed, a.period_budget)?;
    let mut cloud = Table::new(&["tag", "n", "vector"]);
    for p in &est.points {
        cloud.row([p.tag.name().to_string(), p.tag.n().to_string(), join(&p.v)]);
    }
    let mut hull = Table::new(&["vertex", "vector"]);
    for (i, v) in est.hull.vertices.iter().enumerate() {
        hull.row([i.to_string(), join(v)]);
    }
    let pts: Vec<[f64; 2]> = est.points.iter().map(|p| plane(&p.v)).collect();
    let mut svg = Svg::new(&pts);
    svg.points(&pts, "#1f77b4");
    let mut verts: Vec<[f64; 2]> = est.hull.vertices.iter().map(|v| plane(v)).collect();
    if verts.len() >= 3 {
        svg.polygon(&verts, "#d62728");
    } else {
        verts.extend(verts.first().copied());
        svg.polyline(&verts, "#d62728");
    }
    Ok(Outcome {
        artifacts: vec![
            cloud.finish("cloud.csv"),
            hull.finish("hull.csv"),
            svg.finish("hull.svg", &format!("rotation set of {}", a.system), "ρ1", "ρ2"),
        ],
        results: json!({
            "dim": est.dim,
            "points": est.points.len(),
            "hull_vertices": est.hull.vertices,
            "diameter": est.hull.diameter(),
        }),
        certificate_failure: None,
    })
}

pub fn rotnum(a: &RotnumArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let f = lift_of(sys, "rotnum")?;
    let x = parse::scalar(&a.x)?;
    let r = rotation_number(f, x, a.n)?;
    let mut t = Table::new(&["value", "raw", "cauchy_gap", "locked_p", "locked_q"]);
    let (p, q) = r.locked.map(|(p, q)| (p.to_string(), q.to_string())).unwrap_or_default();
    t.row([num(r.value), num(r.raw), num(r.cauchy_gap), p, q]);
    Ok(Outcome {
        artifacts: vec![t.finish("rotnum.csv")],
        results: json!(r),
        certificate_failure: None,
    })
}

pub fn pointwise(a: &PointwiseArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let obs = match &a.obs {
        Some(name) => cat.observable(name, sys)?.clone(),
        None => ergokit::rotation::rotation_observable(sys)?,
    };
    let x = parse::point(sys, &a.point)?;
    require(a.horizon >= 1000 && a.horizon <= 100_000_000, "--horizon must be in 1000..=1e8")?;
    let cps = geometric_checkpoints(16.0, 1.25, a.horizon);
    let acc = accumulation_set(sys, &obs, &x, a.horizon, &cps)?;
    let mut t = Table::new(&["time", "average", "cluster"]);
    let mut cluster_of = vec![0; acc.averages.len()];
    for (c, members) in acc.clusters.iter().enumerate() {
        for &i in members {
            cluster_of[i] = c;
        }
    }
    for ((time, avg), c) in acc.times.iter().zip(&acc.averages).zip(&cluster_of) {
        t.row([time.to_string(), join(avg), c.to_string()]);
    }
    let pts: Vec<[f64; 2]> = acc.averages.iter().map(|v| plane(v)).collect();
    let mut svg = Svg::new(&pts);
    svg.polyline(&pts, "#1f77b4");
    svg.points(&pts, "#1f77b4");
    Ok(Outcome {
        artifacts: vec![t.finish("averages.csv"), svg.finish("averages.svg", "Birkhoff averages", "φ1", "φ2")],
        results: json!({ "diameter": acc.diameter, "clusters": acc.clusters.len(), "final": acc.averages.last() }),
        certificate_failure: None,
    })
}

fn grids(eps: &str, n: &str) -> Result<(Vec<f64>, Vec<usize>)> {
    let e = parse::scale_grid(eps)?;
    let n = parse::int_grid(n)?;
    require(e.iter().all(|&x| x > 0.0 && x < 1.0), "scales must lie in (0, 1)")?;
    require(n.iter().all(|&k| (1..=64).contains(&k)), "orbit lengths must lie in 1..=64")?;
    Ok((e, n))
}

fn pressure_artifacts(est: &PressureEstimate, name: &str) -> Vec<crate::output::Artifact> {
    let mut t = Table::new(&["eps", "n", "log_sum"]);
    for c in &est.table {
        t.row([num(c.eps), c.n.to_string(), num(c.log_sum)]);
    }
    let mut f = Table::new(&["eps", "rate"]);
    for g in &est.fits {
        f.row([num(g.eps), num(g.rate)]);
    }
    vec![t.finish(&format!("{name}_table.csv")), f.finish(&format!("{name}_fits.csv"))]
}

fn pressure_results(est: &PressureEstimate) -> serde_json::Value {
    json!({
        "estimate": est.estimate,
        "fits": est.fits,
        "mdim": est.mdim,
        "exact": est.exact,
        "unreliable": est.unreliable,
    })
}

pub fn entropy(a: &GridArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let (e, n) = grids(&a.eps, &a.n)?;
    let est = entropy_estimate(sys, &e, &n)?;
    Ok(Outcome {
        artifacts: pressure_artifacts(&est, "entropy"),
        results: pressure_results(&est),
        certificate_failure: None,
    })
}

pub fn pressure(a: &PressureArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.grid.system)?;
    let psi = cat.observable(&a.psi, sys)?;
    let (e, n) = grids(&a.grid.eps, &a.grid.n)?;
    let est = pressure_estimate(sys, psi, &e, &n)?;
    Ok(Outcome {
        artifacts: pressure_artifacts(&est, "pressure"),
        results: pressure_results(&est),
        certificate_failure: None,
    })
}

pub fn mdim(a: &GridArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let (e, n) = grids(&a.eps, &a.n)?;
    let est = entropy_estimate(sys, &e, &n)?;
    let m = mdim_from_fits(&est.fits)?;
    let mut t = Table::new(&["log2_inv_eps", "rate"]);
    for g in &est.fits {
        t.row([num(-g.eps.log2()), num(g.rate)]);
    }
    let mut artifacts = pressure_artifacts(&est, "entropy");
    artifacts.push(t.finish("mdim.csv"));
    Ok(Outcome {
        artifacts,
        results: json!({ "mdim": m, "entropy": est.estimate }),
        certificate_failure: None,
    })
}

pub fn katok(a: &KatokArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let mu = parse::sampler(&a.measure)?;
    let psi = a.psi.as_deref().map(|p| cat.observable(p, sys)).transpose()?;
    let gamma = parse::scalar(&a.gamma)?;
    let (e, n) = grids(&a.eps, &a.n)?;
    require(a.samples >= 100 && a.samples <= 10_000_000, "--samples must be in 100..=1e7")?;
    let k = katok_entropy(sys, &mu, psi, gamma, &e, &n, a.samples, a.seed)?;
    let mut t = Table::new(&["eps", "n", "log_weight"]);
    for c in &k.table {
        t.row([num(c.eps), c.n.to_string(), num(c.log_sum)]);
    }
    Ok(Outcome {
        artifacts: vec![t.finish("katok_table.csv")],
        results: json!({ "estimate": k.estimate, "fits": k.fits, "reference_entropy": mu.entropy() }),
        certificate_failure: None,
    })
}

pub fn chainrec(a: &ChainrecArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let f = lift_of(sys, "chainrec")?;
    let g = chain_recurrence(f, a.boxes)?;
    let mut t = Table::new(&["component", "box", "coords"]);
    for (i, c) in g.components.iter().enumerate() {
        for &b in &c.boxes {
            let coords: Vec<String> = g.box_coords(b).iter().map(|x| x.to_string()).collect();
            t.row([i.to_string(), b.to_string(), coords.join(" ")]);
        }
    }
    let summary: Vec<_> = g
        .components
        .iter()
        .map(|c| json!({ "boxes": c.boxes.len(), "isolated": c.isolated, "gap_to_rest": c.gap_to_rest }))
        .collect();
    Ok(Outcome {
        artifacts: vec![t.finish("components.csv")],
        results: json!({ "boxes_per_axis": g.boxes_per_axis, "components": summary, "warning": g.warning }),
        certificate_failure: None,
    })
}

pub fn glue_cmd(a: &GlueArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let eps = parse::scalar(&a.eps)?;
    let segs = a.segments.iter().map(|s| parse::segment(sys, s)).collect::<std::result::Result<Vec<_>, _>>()?;
    let spec = SegmentSpec::new(segs, eps);
    let g = match &a.net_delta {
        Some(d) => {
            let net = build_periodic_net(sys, &NetClass::Whole, parse::scalar(d)?)?;
            gluing_from_shadowing(sys, &net, &spec)?
        }
        None if a.periodic => glue_periodic(sys, &spec)?,
        None => glue(sys, &spec)?,
    };
    let mut t = Table::new(&["segment", "offset", "gap", "error"]);
    for (i, (o, e)) in g.offsets.iter().zip(&g.errors).enumerate() {
        let gap = g.gaps.get(i).map(|p| p.to_string()).unwrap_or_default();
        t.row([i.to_string(), o.to_string(), gap, num(*e)]);
    }
    Ok(Outcome {
        artifacts: vec![t.finish("glue.csv")],
        results: json!({ "point": g.point, "period": g.period, "gap_bound": g.gap_bound, "gaps": g.gaps }),
        certificate_failure: None,
    })
}

/// Random δ-pseudo-orbit: circle maps get uniform kicks in [-δ, δ]; shifts
/// keep the symbols that fix the distance within δ and resample the rest.
fn pseudo_orbit(sys: &System, rng: &mut ChaCha8Rng, len: usize, delta: f64) -> Result<Vec<MetricPoint>> {
    match sys {
        System::Lift(f) => {
            let d = f.dim();
            let mut z: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let mut out = vec![MetricPoint::Torus(z.clone())];
            for _ in 1..len {
                z = f.step_torus(&z);
                for c in z.iter_mut() {
                    *c = (*c + rng.random_range(-delta..=delta)).rem_euclid(1.0);
                }
                out.push(MetricPoint::Torus(z.clone()));
            }
            Ok(out)
        }
        System::Shift(s) => {
            // Agreement on the first j symbols gives distance at most 2^-j.
            let keep = (-delta.log2()).ceil().max(1.0) as usize;
            let window = keep + 32;
            let mut w = s.random_word(rng, window);
            let mut out = vec![MetricPoint::Symbol(s.extend(&w))];
            for _ in 1..len {
                w.remove(0);
                w.truncate(keep);
                s.random_continue(rng, &mut w, window);
                out.push(MetricPoint::Symbol(s.extend(&w)));
            }
            Ok(out)
        }
    }
}

pub fn shadow_cmd(a: &ShadowArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let delta = parse::scalar(&a.delta)?;
    require(delta > 0.0 && delta < 0.5, "--delta must lie in (0, 1/2)")?;
    require(a.count >= 1 && a.count <= 1_000_000 && a.len >= 1 && a.len <= 100_000, "--count or --len out of range")?;
    let rows = (0..a.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(a.seed, i as u64));
            let pseudo = pseudo_orbit(sys, &mut rng, a.len, delta)?;
            let sh = shadow(sys, &pseudo, delta, false)?;
            Ok((sh.achieved, sh.bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["orbit", "achieved", "bound", "within"]);
    for (i, (ach, bound)) in rows.iter().enumerate() {
        t.row([i.to_string(), num(*ach), num(*bound), (ach <= bound).to_string()]);
    }
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok(Outcome {
        artifacts: vec![t.finish("shadow.csv")],
        results: json!({ "worst_error": worst, "bound": rows[0].1, "all_within": rows.iter().all(|r| r.0 <= r.1) }),
        certificate_failure: None,
    })
}

pub fn net(a: &NetArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let delta = parse::scalar(&a.delta)?;
    let class = match a.component {
        None => NetClass::Whole,
        Some(c) => {
            let g = chain_recurrence(lift_of(sys, "net --component")?, a.boxes)?;
            NetClass::from_component(&g, c)?
        }
    };
    let n = build_periodic_net(sys, &class, delta)?;
    let mut t = Table::new(&["member", "point", "period"]);
    for (i, (m, p)) in n.members.iter().zip(&n.periods).enumerate() {
        t.row([i.to_string(), serde_json::to_string(m).unwrap_or_default(), p.to_string()]);
    }
    Ok(Outcome {
        artifacts: vec![t.finish("net.csv")],
        results: json!({ "size": n.size(), "k_bound": n.k_bound, "delta": n.delta }),
        certificate_failure: None,
    })
}

pub fn cylinder_basis(alphabet: usize, depth: usize) -> Vec<Observable> {
    let mut out = Vec::new();
    let mut words: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..depth {
        words = words
            .iter()
            .flat_map(|w| {
                (0..alphabet as u8).map(move |c| {
                    let mut v = w.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
        out.extend(words.iter().map(|w| Observable::cylinder(w)));
    }
    out
}

pub fn permeasure(a: &PermeasureArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let System::Shift(s) = sys else {
        return Err(Failure::Unsupported("periodic measures are built on shifts".into()));
    };
    let target = parse::mixture(&a.target)?;
    let zeta = parse::scalar(&a.zeta)?;
    require((1..=8).contains(&a.depth), "--depth must be in 1..=8")?;
    let basis = cylinder_basis(s.alphabet(), a.depth);
    let pm = approximate_by_periodic_measure(sys, &target, zeta, &basis, a.seed)?;
    let mut t = Table::new(&["basis", "average", "target"]);
    for (i, (avg, tg)) in pm.averages.iter().zip(&pm.targets).enumerate() {
        t.row([i.to_string(), join(avg), join(tg)]);
    }
    let word: String = pm.word.iter().map(|&c| char::from_digit(c as u32, 36).unwrap_or('?')).collect();
    Ok(Outcome {
        artifacts: vec![t.finish("permeasure.csv")],
        results: json!({
            "word": word,
            "period": pm.word.len(),
            "d_star": pm.d_star,
            "truncation": pm.truncation,
            "bound": pm.bound,
            "within_zeta": pm.bound <= zeta,
        }),
        certificate_failure: None,
    })
}

pub fn wild(a: &WildArgs, cat: &Catalog) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let phi = cat.observable(&a.obs, sys)?;
    let delta = parse::vertices(&a.delta)?;
    let eps = parse::scalar(&a.eps)?;
    let base = parse::point(sys, &a.base)?;
    let sched = build_schedule(sys, phi, &delta, a.depth, eps)?;
    let wp = construct_wild_point(sys, phi, &sched, &base)?;
    let x = MetricPoint::Symbol(wp.point.clone());
    let rep = verify_oscillation(sys, phi, &x, &sched, Some(&wp.itinerary))?;
    let mut osc = Table::new(&["k", "i", "time", "target", "average", "measured", "budget", "pass", "path_distance"]);
    for r in &rep.rows {
        osc.row([
            r.k.to_string(),
            r.i.to_string(),
            r.time.to_string(),
            join(&r.target),
            join(&r.average),
            num(r.measured),
            num(r.budget),
            r.pass.to_string(),
            num(polyline_distance(&delta, &r.average)),
        ]);
    }
    let mut sc = Table::new(&["k", "i", "target", "delta", "eps", "n", "repeats", "gap_bound", "planned_end"]);
    for b in sched.blocks() {
        sc.row([
            b.k.to_string(),
            b.i.to_string(),
            join(&b.target),
            num(b.delta),
            num(b.eps),
            b.n.to_string(),
            b.repeats.to_string(),
            b.gap_bound.to_string(),
            b.planned_end.to_string(),
        ]);
    }
    let end = wp.itinerary.checkpoints.last().map_or(0, |c| c.time);
    let stream: String = wp
        .point
        .word(0, a.horizon.min(end))
        .iter()
        .map(|&c| char::from_digit(c as u32, 36).unwrap_or('?'))
        .chain(std::iter::once('\n'))
        .collect();
    let path: Vec<[f64; 2]> = delta.iter().map(|v| plane(v)).collect();
    let avgs: Vec<[f64; 2]> = rep.rows.iter().map(|r| plane(&r.average)).collect();
    let mut all = path.clone();
    all.extend(&avgs);
    let mut svg = Svg::new(&all);
    svg.polyline(&path, "#d62728");
    svg.polyline(&avgs, "#1f77b4");
    svg.points(&avgs, "#1f77b4");
    let extremes = if sched.dim() == 1 {
        Some(empirical_extremes(phi, &wp, &sched, a.horizon)?)
    } else {
        None
    };
    Ok(Outcome {
        artifacts: vec![
            osc.finish("oscillation.csv"),
            sc.finish("schedule.csv"),
            crate::output::Artifact {
                name: "stream.txt".into(),
                bytes: stream.into_bytes(),
            },
            svg.finish("averages.svg", "checkpoint averages", "φ1", "φ2"),
        ],
        results: json!({
            "pass": rep.pass,
            "first_failure": rep.first_failure,
            "total_len": sched.total_len,
            "end": end,
            "levels": sched.levels.iter().map(|l| json!({"k": l.k, "a": l.a, "theta": l.theta})).collect::<Vec<_>>(),
            "ratio_conditions_hold": sched.ratio_conditions_hold,
            "base_distance": wp.base_distance,
            "extremes": extremes,
        }),
        certificate_failure: None,
    })
}

pub fn fractal_params(a: &FractalArgs) -> Result<FractalParams> {
    let mut p = FractalParams::new(parse::scalar(&a.eps)?);
    p.gamma = parse::scalar(&a.gamma)?;
    p.t = parse::scalar(&a.t)?;
    p.depth = a.depth;
    p.mu1 = a.mu1.as_deref().map(parse::sampler).transpose()?;
    p.nu = parse::sampler(&a.nu)?;
    p.seed = a.seed;
    require((2..=4096).contains(&a.representatives), "--representatives must be in 2..=4096")?;
    p.representatives = a.representatives;
    Ok(p)
}

pub fn fractal(a: &FractalArgs, cat: &Catalog, certify: bool) -> Result<Outcome> {
    let sys = cat.system(&a.system)?;
    let phi = cat.observable(&a.obs, sys)?;
    let psi = cat.observable(&a.psi, sys)?;
    let params = fractal_params(a)?;
    let fam = build_fractal_family(sys, phi, psi, &params)?;
    let cert = entropy_lower_certificate(&fam);
    let mut levels = Table::new(&["k", "zeta", "n1", "typical_mass", "class", "gap", "log_m1", "n2", "chi", "repeats", "t_len", "log_z"]);
    for l in &fam.schedule.levels {
        levels.row([
            l.k.to_string(),
            num(l.zeta),
            l.n1.to_string(),
            num(l.typical_mass),
            l.class.to_string(),
            l.gap.to_string(),
            num(l.log_m1),
            l.n2.to_string(),
            l.chi.to_string(),
            l.repeats.to_string(),
            l.t_len.to_string(),
            num(l.log_z),
        ]);
    }
    let mut counts = Table::new(&["k", "chi", "repeats", "unit_len", "unit_log_weight", "outer_gaps", "t_len", "log_z", "rate"]);
    for r in &cert.table {
        counts.row([
            r.k.to_string(),
            r.chi.to_string(),
            r.repeats.to_string(),
            r.unit_len.to_string(),
            num(r.unit_log_weight),
            r.outer_gaps.to_string(),
            r.t_len.to_string(),
            num(r.log_z),
            num(r.rate),
        ]);
    }
    let mut artifacts = vec![levels.finish("levels.csv"), counts.finish("certificate.csv")];
    let mut results = json!({
        "certificate": {
            "rate": cert.rate,
            "threshold": cert.threshold,
            "p_top": cert.p_top,
            "var_psi": cert.var_psi,
            "passed": cert.passed,
        },
        "separation": fam.separation,
    });
    if !certify {
        let h = verify_fractal_is_historic(sys, phi, &fam, &[])?;
        let mut alt = Table::new(&["representative", "time", "k", "average", "expected", "deviation", "budget", "within"]);
        for (j, p) in h.points.iter().enumerate() {
            for r in &p.rows {
                let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
                alt.row([
                    j.to_string(),
                    r.time.to_string(),
                    r.k.map(|k| k.to_string()).unwrap_or_default(),
                    join(&r.average),
                    r.expected.as_deref().map(join).unwrap_or_default(),
                    opt(r.deviation),
                    opt(r.budget),
                    r.within_budget.map(|b| b.to_string()).unwrap_or_default(),
                ]);
            }
        }
        artifacts.push(alt.finish("alternation.csv"));
        let min_gap = h.points.iter().map(|p| p.cluster_gap).fold(f64::INFINITY, f64::min);
        results["historic"] = json!({
            "historic": h.historic,
            "mu1_average": h.mu1_average,
            "mu2_average": h.mu2_average,
            "min_cluster_gap": min_gap,
            "required_gap": h.points.first().map(|p| p.required_gap),
        });
    }
    let certificate_failure = (certify && !cert.passed)
        .then(|| format!("certified rate {} is below the threshold {}", cert.rate, cert.threshold));
    Ok(Outcome {
        artifacts,
        results,
        certificate_failure,
    })
}

pub fn accept(a: &AcceptArgs, cat: &Catalog) -> Result<Outcome> {
    let only = a.only.as_deref().map(parse::int_grid).transpose()?;
    let results = crate::suite::run(only.as_deref(), cat);
    let mut t = Table::new(&["criterion", "name", "pass", "detail"]);
    for r in &results {
        t.row([r.id.to_string(), r.name.to_string(), r.pass.to_string(), r.detail.clone()]);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    Ok(Outcome {
        artifacts: vec![t.finish("acceptance.csv")],
        results: json!({ "passed": results.len() - failed.len(), "failed": failed }),
        certificate_failure: (!failed.is_empty()).then(|| format!("criteria {failed:?} failed")),
    })
}

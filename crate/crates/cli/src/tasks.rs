//! Dispatch of a validated configuration to the library. Each task returns
//! CSV tables and a list of results tagged by the operation that produced
//! them.

use formres::cohomology::{betti_ds, betti_sds, table};
use formres::desitter::{ds_k_dims, ds_state_catalog, table_41};
use formres::evolve::{
    evolve_oneform, evolve_scalar, evolve_twoform, fit_decay, mode_scan, EvolutionState, TimeSeries,
};
use formres::kds_maxwell::refinement_study;
use formres::trapping::trapping_report;
use formres::zero_modes::{
    basis_u_pm, dual_state_table, h1_triviality_certificate, h_dims, k_dims, matching_rank_report, state_catalog,
};
use formres::{Result, SdsParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{EvolveSector, Spacetime, Task, Validated};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tagged {
    pub operation: String,
    pub value: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub results: Vec<Tagged>,
}

impl Artifacts {
    fn push<T: Serialize>(&mut self, operation: &str, value: &T) {
        let value = serde_json::to_value(value).expect("library results serialize");
        self.results.push(Tagged { operation: operation.to_string(), value });
    }

    fn table(&mut self, name: &str, csv: String) {
        self.tables.push(Table { name: name.to_string(), csv });
    }
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Serialized name of a unit enum variant.
fn tag<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn sds(v: &Validated) -> SdsParams {
    match v.spacetime {
        Spacetime::Sds(p) => p,
        _ => unreachable!("validation pins the spacetime kind per task"),
    }
}

/// `count` points from `a` to `b` inclusive.
fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()
}

pub fn run(v: &Validated) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    let nm = &v.config.numerics;
    match &v.config.task {
        Task::Geometry {} => {
            let p = sds(v);
            let h = p.horizons()?;
            out.push("geometry::horizons", &h);
            out.push("geometry::lambda_small", &p.lambda_small());
            out.push("geometry::photon_sphere_radius", &p.photon_sphere_radius());
            out.push(
                "geometry::check_nondegeneracy",
                &json!({ "holds": p.check_nondegeneracy(), "bound": SdsParams::nondegeneracy_bound(p.n()) }),
            );
            let rows = linspace(h.r_minus, h.r_plus, nm.grid_points)
                .into_iter()
                .map(|r| vec![num(r), num(p.mu(r)), num(p.dmu(r)), num(p.mu_tilde(r))]);
            out.table("profile.csv", csv(&["r", "mu", "dmu", "mu_tilde"], rows));
        }
        Task::Trapping {} => {
            let p = sds(v);
            let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
            let rep = trapping_report(&p, nm.escape_samples, &mut rng)?;
            out.push("trapping::trapping_report", &rep);
            let rows = rep.escape.preview.iter().map(|s| {
                vec![num(s.point.r), num(s.point.xi), num(s.point.eta_sq), num(s.point.z), tag(&s.kind), num(s.hp_f), num(s.hp2_f)]
            });
            out.table("escape_samples.csv", csv(&["r", "xi", "eta_sq", "z", "kind", "hp_f", "hp2_f"], rows));
        }
        Task::ZeroModes {} => {
            let p = sds(v);
            let n = p.n();
            out.push("zero_modes::matching_rank_report", &matching_rank_report(&p)?);
            let basis = basis_u_pm(&p)?;
            out.push("zero_modes::basis_u_pm", &basis);
            out.push("zero_modes::h1_triviality_certificate", &h1_triviality_certificate(&p)?);
            out.push("zero_modes::k_dims", &k_dims(n));
            out.push("zero_modes::h_dims", &h_dims(n));
            out.push("zero_modes::state_catalog", &state_catalog(n));
            out.push("zero_modes::dual_state_table", &dual_state_table(n));
            let (up, um) = (basis.u_plus, basis.u_minus);
            let rows = linspace(basis.r_minus, basis.r_plus, nm.grid_points)
                .into_iter()
                .map(|r| vec![num(r), num(up.f1(r)), num(up.f2(r)), num(um.f1(r)), num(um.f2(r))]);
            out.table("u_pm.csv", csv(&["r", "f1_plus", "f2_plus", "f1_minus", "f2_minus"], rows));
        }
        Task::Cohomology {} => {
            let (betti, op) = match v.spacetime {
                Spacetime::Ds(d) => (betti_ds(d.n)?, "cohomology::betti_ds"),
                _ => (betti_sds(v.spacetime.n())?, "cohomology::betti_sds"),
            };
            out.push(op, &betti);
            let t = table(&betti);
            out.push("cohomology::table", &t);
            let mut header = vec!["space".to_string()];
            header.extend((0..t.dim_k.len()).map(|k| format!("k{k}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let row = |name: &str, vals: Vec<String>| std::iter::once(name.to_string()).chain(vals).collect();
            let rows = vec![
                row("K", t.dim_k.iter().map(usize::to_string).collect()),
                row("H", t.h_exact.iter().map(|h| opt(*h)).collect()),
                row("H_lower", t.h_lower.iter().map(usize::to_string).collect()),
                row("H_upper", t.h_upper.iter().map(usize::to_string).collect()),
            ];
            out.table("cohomology.csv", csv(&header, rows));
        }
        Task::DsTable {} => {
            let n = v.spacetime.n();
            let t = table_41(n)?;
            out.push("desitter::table_41", &t);
            out.push(
                "desitter::table_41::properties",
                &json!({
                    "all_nonnegative": t.all_nonnegative(),
                    "zero_never_double": t.zero_never_double(),
                    "degrees_with_zero_root": t.degrees_with_zero_root(),
                    "slowest_decay_root": t.slowest_decay_root(),
                }),
            );
            out.push("desitter::ds_k_dims", &ds_k_dims(n));
            out.push("desitter::ds_state_catalog", &ds_state_catalog(n));
            let pair = |x: Option<[i64; 2]>| [opt(x.map(|r| r[0])), opt(x.map(|r| r[1]))];
            let rows = t.rows.iter().map(|r| {
                let [t1, t2] = pair(r.tangential);
                let [n1, n2] = pair(r.normal);
                vec![r.degree.to_string(), t1, t2, n1, n2, r.ddelta[0].to_string(), r.ddelta[1].to_string()]
            });
            let header = ["degree", "tangential_1", "tangential_2", "normal_1", "normal_2", "ddelta_1", "ddelta_2"];
            out.table("indicial_roots.csv", csv(&header, rows));
        }
        Task::KdsVerify { fields, checks } => {
            let Spacetime::Kds(p) = v.spacetime else { unreachable!("validated") };
            out.push("kds_maxwell::horizons", &p.horizons()?);
            let mut rows = Vec::new();
            for &field in fields {
                for &check in checks {
                    let s = refinement_study(&p, field, check, &nm.sizes, nm.inset, nm.theta_min, v.stencil)?;
                    for l in &s.levels {
                        rows.push(vec![
                            tag(&field),
                            tag(&check),
                            l.n_r.to_string(),
                            l.n_theta.to_string(),
                            num(l.h_r),
                            num(l.h_theta),
                            num(l.max_residual),
                        ]);
                    }
                    out.push("kds_maxwell::refinement_study", &s);
                }
            }
            let header = ["field", "check", "n_r", "n_theta", "h_r", "h_theta", "max_residual"];
            out.table("kds_refinement.csv", csv(&header, rows));
        }
        Task::Evolve { sector } => evolve(v, sector, &mut out)?,
        Task::ModeScan { sector, scan_box } => {
            let p = sds(v);
            let scan = mode_scan(&p, *sector, scan_box, &nm.frobenius)?;
            let mut summary = serde_json::to_value(&scan).expect("scan serializes");
            if let Some(obj) = summary.as_object_mut() {
                obj.remove("points");
                obj.insert("zero_count".into(), json!(scan.zero_count()));
            }
            out.push("evolve::mode_scan", &summary);
            out.table("scan.csv", scan.to_csv());
        }
    }
    Ok(out)
}

fn state_csv(s: &EvolutionState) -> String {
    let mut header = vec!["r"];
    header.extend(s.field_names.iter().map(String::as_str));
    let rows = (0..s.r.len()).map(|i| std::iter::once(num(s.r[i])).chain(s.fields.iter().map(|f| num(f[i]))).collect());
    csv(&header, rows)
}

/// One fit per probe; a failed fit is reported in place of its numbers.
fn probe_fits(series: &TimeSeries, t_start: f64) -> Vec<Value> {
    series
        .probes
        .iter()
        .map(|p| match fit_decay(&series.t, &p.values, t_start) {
            Ok(f) => json!({ "probe": p.label, "r": p.r, "fit": f }),
            Err(e) => json!({ "probe": p.label, "r": p.r, "error": e.to_string() }),
        })
        .collect()
}

fn evolve(v: &Validated, sector: &EvolveSector, out: &mut Artifacts) -> Result<()> {
    let p = sds(v);
    let nm = &v.config.numerics;
    match sector {
        EvolveSector::Scalar { ell, data } => {
            let run = evolve_scalar(&p, data, *ell, &nm.tortoise)?;
            out.push("evolve::evolve_scalar", &json!({ "ell": ell, "dt": run.dt, "h": run.h, "equation": run.equation }));
            out.push("evolve::fit_decay", &probe_fits(&run.series, nm.fit_start));
            let rows = run.series.t.iter().zip(&run.energy).skip(1).map(|(t, e)| vec![num(*t), num(*e)]);
            out.table("energy.csv", csv(&["t", "energy"], rows));
            out.table("timeseries.csv", run.series.to_csv());
            out.table("final_state.csv", state_csv(&run.final_state));
        }
        EvolveSector::OneForm { data } => {
            let run = evolve_oneform(&p, data, &nm.sliced)?;
            out.push(
                "evolve::evolve_oneform",
                &json!({
                    "dt": run.dt,
                    "h": run.h,
                    "initial_scale": run.initial_scale,
                    "change": run.change,
                    "projection": run.projection,
                }),
            );
            out.push("evolve::fit_decay", &probe_fits(&run.series, nm.fit_start));
            let probes = match run.probe_projections(nm.fit_start) {
                Ok(c) => json!(c.iter().map(|c| json!({ "c_plus": c[0], "c_minus": c[1] })).collect::<Vec<_>>()),
                Err(e) => json!({ "error": e.to_string() }),
            };
            out.push("evolve::OneFormRun::probe_projections", &probes);
            out.table("timeseries.csv", run.series.to_csv());
            out.table("final_state.csv", state_csv(&run.final_state));
        }
        EvolveSector::TwoForm { data } => {
            let run = evolve_twoform(&p, data, &nm.tortoise)?;
            out.push("evolve::evolve_twoform", &json!({ "dt": run.omega.dt, "h": run.omega.h, "equation": run.omega.equation }));
            out.push(
                "evolve::fit_decay",
                &json!({ "omega": probe_fits(&run.omega.series, nm.fit_start), "dual": probe_fits(&run.dual.series, nm.fit_start) }),
            );
            let asym = match run.asymptote(nm.fit_start) {
                Ok(c) => json!(c.iter().map(|c| json!({ "omega": c[0], "dual": c[1] })).collect::<Vec<_>>()),
                Err(e) => json!({ "error": e.to_string() }),
            };
            out.push("evolve::TwoFormRun::asymptote", &asym);
            out.table("timeseries_omega.csv", run.omega.series.to_csv());
            out.table("timeseries_dual.csv", run.dual.series.to_csv());
        }
    }
    Ok(())
}

use holonomy::verify::{run_suite, VerifySetup};
use holonomy::{
    action_transport, dynamic_factor, factorization_residual, full_evolution_with, hamiltonian_spectrum,
    holonomy_operator_with, integrate_direct, linalg, synthesize_loop, CMatrix, SynthesisProblem,
    SynthesisTarget, C64,
};
use serde::Serialize;

use crate::config::{RunConfig, System, TargetConfig, TargetSpace};
use crate::error::CliError;
use crate::output::{num, Artifacts, Format};

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub sys: System,
    pub out: Artifacts,
}

pub fn spectrum(ctx: &mut Context) -> Result<(), CliError> {
    let Context { sys, out, .. } = ctx;
    let energies = hamiltonian_spectrum(&sys.scheme, &sys.basis, &sys.hamiltonian)?;
    let m = sys.basis.m();
    match out.format {
        Format::Csv => {
            let mut header: Vec<String> = (1..=m).map(|k| format!("n_{k}")).collect();
            header.push("energy".into());
            let rows = sys
                .basis
                .iter()
                .zip(&energies)
                .map(|(n, e)| {
                    let mut row: Vec<String> = n.as_slice().iter().map(i64::to_string).collect();
                    row.push(num(*e));
                    row
                })
                .collect();
            out.csv("spectrum", &header, rows)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Level {
                n: Vec<i64>,
                energy: f64,
            }
            #[derive(Serialize)]
            struct Spectrum {
                levels: Vec<Level>,
            }
            let levels = sys
                .basis
                .iter()
                .zip(&energies)
                .map(|(n, e)| Level {
                    n: n.as_slice().to_vec(),
                    energy: *e,
                })
                .collect();
            out.json("spectrum", &Spectrum { levels })
        }
    }
}

pub fn evolve_classical(ctx: &mut Context) -> Result<(), CliError> {
    const CMD: &str = "evolve-classical";
    let Context { cfg, sys, out } = ctx;
    let conn = sys.conn(CMD)?;
    let path = sys.path(CMD)?;
    let state0 = sys.initial(CMD)?;
    let steps = cfg.run.steps;
    let traj = integrate_direct(state0, conn, path, &sys.hamiltonian, steps)?;
    let transport = action_transport(conn, path, &traj, steps)?;
    match out.format {
        Format::Csv => {
            let csv = traj.to_csv();
            let mut lines = csv.lines();
            let header: Vec<String> = lines.next().unwrap_or("").split(',').map(String::from).collect();
            let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
            out.csv("trajectory", &header, rows)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Traj {
                times: Vec<f64>,
                actions: Vec<Vec<f64>>,
                angles: Vec<Vec<f64>>,
            }
            out.json(
                "trajectory",
                &Traj {
                    times: traj.times().to_vec(),
                    actions: traj.states().iter().map(|s| s.actions().to_vec()).collect(),
                    angles: traj.states().iter().map(|s| s.angles().to_vec()).collect(),
                },
            )?;
        }
    }
    out.real_matrix("transport", transport.rows().into_iter().map(|r| r.to_vec()).collect())
}

#[derive(Serialize)]
struct QuantumSummary {
    t: f64,
    steps: usize,
    factorization_residual: f64,
    unitarity_residual: f64,
    block_residual: f64,
    #[serde(rename = "loop")]
    is_loop: bool,
}

pub fn evolve_quantum(ctx: &mut Context) -> Result<(), CliError> {
    const CMD: &str = "evolve-quantum";
    let Context { cfg, sys, out } = ctx;
    let conn = sys.conn(CMD)?;
    let path = sys.path(CMD)?;
    let (steps, t, prop) = (cfg.run.steps, cfg.run.t, cfg.run.propagator);
    let u1 = dynamic_factor(&sys.scheme, &sys.basis, t)?;
    let u2 = holonomy_operator_with(conn, &sys.scheme, path, &sys.basis, steps, prop)?;
    let full = full_evolution_with(conn, &sys.scheme, path, &sys.basis, steps, t, prop)?;
    let residual = factorization_residual(&full, &u1, &u2.operator)?;
    out.operator("U1", &u1)?;
    out.operator("U2", &u2.operator)?;
    out.operator("U_full", &full)?;
    out.json(
        "evolve_quantum_summary",
        &QuantumSummary {
            t,
            steps: u2.steps,
            factorization_residual: residual,
            unitarity_residual: u2.unitarity_residual,
            block_residual: u2.block_residual,
            is_loop: u2.is_loop,
        },
    )
}

pub fn holonomy(ctx: &mut Context) -> Result<(), CliError> {
    const CMD: &str = "holonomy";
    let Context { cfg, sys, out } = ctx;
    let conn = sys.conn(CMD)?;
    let path = sys.path(CMD)?;
    let h = holonomy_operator_with(conn, &sys.scheme, path, &sys.basis, cfg.run.steps, cfg.run.propagator)?;
    out.operator("holonomy", &h.operator)?;
    let summary = h.summary();
    println!(
        "holonomy: steps {} unitarity {} block {} identity_deviation {} loop {}",
        summary.steps,
        num(summary.unitarity_residual),
        num(summary.block_residual),
        num(summary.identity_deviation),
        summary.is_loop
    );
    out.json("holonomy_summary", &summary)
}

fn square(entries: &[[f64; 2]], what: &str) -> Result<CMatrix, CliError> {
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n * n != entries.len() || n == 0 {
        return Err(CliError::Config(format!(
            "{what}: {} entries do not form a square matrix",
            entries.len()
        )));
    }
    Ok(CMatrix::from_shape_fn((n, n), |(r, c)| {
        let [re, im] = entries[r * n + c];
        C64::new(re, im)
    }))
}

pub fn synthesize(ctx: &mut Context) -> Result<(), CliError> {
    const CMD: &str = "synthesize";
    let Context { cfg, sys, out } = ctx;
    let sc = cfg
        .synthesis
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("synthesis: required by `{CMD}`")))?;
    let conn = sys.conn(CMD)?.clone();
    let placeholder = |dim: usize| -> SynthesisTarget {
        match sc.space {
            TargetSpace::QuantumBlock => SynthesisTarget::QuantumBlock {
                scheme: sys.scheme.clone(),
                basis: sys.basis,
                block: sc.block,
                matrix: linalg::identity(dim),
            },
            TargetSpace::Classical => SynthesisTarget::Classical {
                initial: sys.initial.clone().expect("checked below"),
                hamiltonian: sys.hamiltonian.clone(),
                matrix: holonomy::linalg::RMatrix::eye(dim),
            },
        }
    };
    if sc.space == TargetSpace::Classical {
        sys.initial(CMD)?;
    }
    let dim = match sc.space {
        TargetSpace::QuantumBlock => sys.basis.len() / sys.basis.side(),
        TargetSpace::Classical => sys.basis.m(),
    };
    let mut problem = SynthesisProblem::new(placeholder(dim), conn, sc.order);
    if let Some(c) = &sc.center {
        problem.center = c.clone();
    }
    problem.budget = sc.budget;
    problem.restarts = sc.restarts;
    problem.seed = cfg.run.seed;
    problem.steps = sc.steps.unwrap_or(cfg.run.steps);
    problem.propagator = cfg.run.propagator;
    problem.tolerance = sc.tolerance;
    problem.restart_scale = sc.restart_scale;
    problem.initial_step = sc.initial_step;
    problem.validate().map_err(|e| CliError::Config(format!("synthesis: {e}")))?;

    let matrix = match &sc.target {
        TargetConfig::Identity => linalg::identity(dim),
        TargetConfig::Planted { params } => {
            if params.len() != problem.param_len() {
                return Err(CliError::Config(format!(
                    "synthesis.target.params: expected {} entries, got {}",
                    problem.param_len(),
                    params.len()
                )));
            }
            problem.realized(params)?
        }
        TargetConfig::Matrix { matrix } => square(matrix, "synthesis.target.matrix")?,
    };
    problem.target = match problem.target {
        SynthesisTarget::QuantumBlock { scheme, basis, block, .. } => SynthesisTarget::QuantumBlock {
            scheme,
            basis,
            block,
            matrix,
        },
        SynthesisTarget::Classical { initial, hamiltonian, .. } => SynthesisTarget::Classical {
            initial,
            hamiltonian,
            matrix: matrix.mapv(|z| z.re),
        },
    };
    problem.validate().map_err(|e| CliError::Config(format!("synthesis.target: {e}")))?;

    let result = synthesize_loop(&problem)?;
    #[derive(Serialize)]
    struct Report {
        residual: f64,
        evaluations: usize,
        converged: bool,
        restart: usize,
        params: Vec<f64>,
        path: holonomy::PathConfig,
        history: Vec<f64>,
    }
    println!(
        "synthesize: residual {} evaluations {} converged {}",
        num(result.residual),
        result.evaluations,
        result.converged
    );
    out.json(
        "synthesis",
        &Report {
            residual: result.residual,
            evaluations: result.evaluations,
            converged: result.converged,
            restart: result.restart,
            path: result.path.to_config(),
            params: result.params,
            history: result.history,
        },
    )
}

pub fn verify(ctx: &mut Context) -> Result<(), CliError> {
    const CMD: &str = "verify";
    let Context { cfg, sys, out } = ctx;
    let setup = VerifySetup {
        conn: sys.conn(CMD)?.clone(),
        scheme: sys.scheme.clone(),
        basis: sys.basis,
        path: sys.path(CMD)?.clone(),
        hamiltonian: sys.hamiltonian.clone(),
        steps: cfg.run.steps,
        seed: cfg.run.seed,
    };
    let report = run_suite(&setup)?;
    for c in &report.checks {
        println!(
            "{} {} value {} tolerance {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            num(c.value),
            num(c.tolerance)
        );
    }
    match out.format {
        Format::Json => out.json("verify", &report)?,
        Format::Csv => {
            let header = ["check", "value", "tolerance", "passed"].map(String::from);
            let rows = report
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), num(c.value), num(c.tolerance), c.passed.to_string()])
                .collect();
            out.csv("verify", &header, rows)?;
        }
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

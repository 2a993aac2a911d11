use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use tnsim::circuit::{build_qaoa_circuit, random_regular_graph, Circuit, ProblemGraph};
use tnsim::contraction::{contract, cost_profile, cost_profile_csv, maxcut_energy};
use tnsim::ordering::{EliminationOrder, Greedy, Orderer, RGreedy};
use tnsim::slicing::{execute_sliced, find_slice_schedule, width_report_csv, width_vs_n_report, SliceSchedule};
use tnsim::tensornet::{apply_fixed, circuit_to_network, line_graph, parse_bits, OutSpec, TensorNetwork};

#[derive(Parser, Serialize)]
#[command(name = "tnsim", version, about = "Tensor-network QAOA simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Random d-regular MaxCut graph.
    GenGraph(GenGraphArgs),
    /// QAOA circuit for a graph.
    Qaoa(QaoaArgs),
    /// Elimination order for a circuit's amplitude network.
    Order(OrderArgs),
    /// Sliced contraction plan plus width-vs-n report.
    SlicePlan(SlicePlanArgs),
    /// Amplitude or batch of amplitudes.
    Simulate(SimulateArgs),
    /// MaxCut expectation of a QAOA state.
    Energy(EnergyArgs),
    /// Per-step contraction cost.
    CostProfile(CostProfileArgs),
}

#[derive(Args, Serialize)]
struct Common {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave timestamps and wall times out of the output.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Algo {
    Greedy,
    Rgreedy,
}

#[derive(Args, Serialize)]
struct OrdererArgs {
    #[arg(long, value_enum, default_value = "greedy")]
    algo: Algo,
    #[arg(long, default_value_t = RGreedy::DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = RGreedy::DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct GenGraphArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct QaoaArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Number of layers; must match the angle lists when given.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    betas: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct OrderArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[command(flatten)]
    orderer: OrdererArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SlicePlanArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value_t = 0)]
    n_slices: usize,
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Qubits left open, so the plan can drive a batch simulation.
    #[arg(long, value_delimiter = ',')]
    batch: Vec<usize>,
    /// Width-vs-n CSV; defaults to the output path with a `.csv` extension.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    orderer: OrdererArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Schedule JSON from `slice-plan`; plain contraction when omitted.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Output bits, e.g. `0110`; all zeros when omitted.
    #[arg(long)]
    bits: Option<String>,
    /// Input bits; all zeros when omitted.
    #[arg(long)]
    input: Option<String>,
    /// Qubits left open; the result holds one value per assignment.
    #[arg(long, value_delimiter = ',')]
    batch: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    orderer: OrdererArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct EnergyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    betas: Vec<f64>,
    #[command(flatten)]
    orderer: OrdererArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct CostProfileArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[command(flatten)]
    orderer: OrdererArgs,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    /// Bad input or parameters: exit code 2.
    Invalid(String),
    /// Anything else: exit code 1.
    Internal(String),
}

type Outcome<T> = Result<T, Failure>;

trait Classify<T> {
    fn invalid(self, context: &str) -> Outcome<T>;
    fn internal(self, context: &str) -> Outcome<T>;
}

impl<T, E: Display> Classify<T> for Result<T, E> {
    fn invalid(self, context: &str) -> Outcome<T> {
        self.map_err(|e| Failure::Invalid(format!("{context}: {e}")))
    }

    fn internal(self, context: &str) -> Outcome<T> {
        self.map_err(|e| Failure::Internal(format!("{context}: {e}")))
    }
}

#[derive(Serialize)]
struct Cplx {
    re: f64,
    im: f64,
}

fn meta(cli: &Cli, common: &Common) -> Value {
    let mut m = json!({
        "tool": "tnsim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command,
    });
    if !common.no_timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        m["timestamp"] = json!(secs);
    }
    m
}

fn with_meta<T: Serialize>(body: &T, meta: Value) -> Value {
    let mut v = serde_json::to_value(body).expect("serializable output");
    v["meta"] = meta;
    v
}

fn emit(path: Option<&Path>, text: &str) -> Outcome<()> {
    match path {
        Some(p) => fs::write(p, text).invalid(&format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(common: &Common, value: &Value) -> Outcome<()> {
    let mut text = serde_json::to_string(value).internal("serialize")?;
    text.push('\n');
    emit(common.out.as_deref(), &text)
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).invalid(&format!("cannot read {}", path.display()))
}

fn load_graph(path: &Path) -> Outcome<ProblemGraph> {
    ProblemGraph::from_json(&read(path)?).invalid(&format!("bad graph {}", path.display()))
}

fn load_circuit(path: &Path) -> Outcome<Circuit> {
    Circuit::from_text(&read(path)?).invalid(&format!("bad circuit {}", path.display()))
}

fn make_orderer(args: &OrdererArgs) -> Outcome<Box<dyn Orderer>> {
    Ok(match args.algo {
        Algo::Greedy => Box::new(Greedy),
        Algo::Rgreedy => Box::new(RGreedy::new(args.tau, args.reps, args.seed).invalid("rgreedy")?),
    })
}

fn bits_or_zeros(text: Option<&str>, n: usize, what: &str) -> Outcome<Vec<u8>> {
    let bits = match text {
        Some(t) => parse_bits(t).invalid(what)?,
        None => vec![0; n],
    };
    if bits.len() != n {
        return Err(Failure::Invalid(format!(
            "{what}: expected {n} bits, got {}",
            bits.len()
        )));
    }
    Ok(bits)
}

fn network(circuit: &Circuit, input: &[u8], bits: Vec<u8>, batch: &[usize]) -> Outcome<TensorNetwork> {
    let spec = if batch.is_empty() {
        OutSpec::Fixed(bits)
    } else {
        OutSpec::Open {
            qubits: batch.to_vec(),
            bits,
        }
    };
    circuit_to_network(circuit, input, &spec).invalid("network")
}

fn open_set(net: &TensorNetwork) -> BTreeSet<usize> {
    net.open().iter().copied().collect()
}

fn order_network(net: &TensorNetwork, orderer: &dyn Orderer) -> EliminationOrder {
    orderer.order(&line_graph(&apply_fixed(net)), &open_set(net))
}

fn gen_graph(cli: &Cli, a: &GenGraphArgs) -> Outcome<()> {
    let g = random_regular_graph(a.nodes, a.degree, a.seed).invalid("gen-graph")?;
    emit_json(&a.common, &with_meta(&g, meta(cli, &a.common)))
}

fn qaoa(cli: &Cli, a: &QaoaArgs) -> Outcome<()> {
    if let Some(p) = a.p {
        if p != a.gammas.len() || p != a.betas.len() {
            return Err(Failure::Invalid(format!(
                "p = {p} but got {} gammas and {} betas",
                a.gammas.len(),
                a.betas.len()
            )));
        }
    }
    let graph = load_graph(&a.graph)?;
    let circuit = build_qaoa_circuit(&graph, &a.gammas, &a.betas).invalid("qaoa")?;
    let m = serde_json::to_string(&meta(cli, &a.common)).internal("serialize")?;
    emit(a.common.out.as_deref(), &format!("# meta {m}\n{}", circuit.to_text()))
}

fn order(cli: &Cli, a: &OrderArgs) -> Outcome<()> {
    let circuit = load_circuit(&a.circuit)?;
    let n = circuit.num_qubits();
    let net = network(&circuit, &vec![0; n], vec![0; n], &[])?;
    let order = order_network(&net, make_orderer(&a.orderer)?.as_ref());
    emit_json(&a.common, &with_meta(&order, meta(cli, &a.common)))
}

fn slice_plan(cli: &Cli, a: &SlicePlanArgs) -> Outcome<()> {
    let circuit = load_circuit(&a.circuit)?;
    let n = circuit.num_qubits();
    let net = apply_fixed(&network(&circuit, &vec![0; n], vec![0; n], &a.batch)?);
    let orderer = make_orderer(&a.orderer)?;
    let g = line_graph(&net);
    let open = open_set(&net);
    let schedule = find_slice_schedule(&g, a.n_slices, a.r, orderer.as_ref(), &open).invalid("slice-plan")?;
    let rows = width_vs_n_report(&g, a.n_slices, orderer.as_ref(), &open).invalid("slice-plan")?;

    let m = meta(cli, &a.common);
    let mut body: Value = serde_json::from_str(&schedule.to_json()).internal("schedule")?;
    body["meta"] = m.clone();
    emit_json(&a.common, &body)?;

    let csv_path = match (&a.csv, &a.common.out) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(out)) => Some(out.with_extension("csv")),
        (None, None) => None,
    };
    let csv = width_report_csv(&rows);
    match csv_path {
        Some(p) => {
            emit(Some(&p), &csv)?;
            let mut text = serde_json::to_string(&m).internal("serialize")?;
            text.push('\n');
            emit(Some(&meta_path(&p)), &text)
        }
        None => emit(None, &csv),
    }
}

fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Outcome<()> {
    let circuit = load_circuit(&a.circuit)?;
    let n = circuit.num_qubits();
    let input = bits_or_zeros(a.input.as_deref(), n, "--input")?;
    let bits = bits_or_zeros(a.bits.as_deref(), n, "--bits")?;
    let net = network(&circuit, &input, bits.clone(), &a.batch)?;

    let start = Instant::now();
    let (result, width, slices) = match &a.schedule {
        Some(path) => {
            let schedule = SliceSchedule::from_json(&read(path)?).invalid("bad schedule")?;
            let g = line_graph(&apply_fixed(&net));
            let (width, _) = schedule.replay(&g, &open_set(&net)).invalid("schedule")?;
            let r = execute_sliced(&net, &schedule, a.jobs).invalid("simulate")?;
            (r, width, schedule.n_total)
        }
        None => {
            let order = order_network(&net, make_orderer(&a.orderer)?.as_ref());
            let r = contract(&net, &order).internal("contract")?;
            (r, order.width, 0)
        }
    };
    let wall = start.elapsed().as_secs_f64();

    let values: Vec<Cplx> = result
        .values
        .iter()
        .map(|v| Cplx { re: v.re, im: v.im })
        .collect();
    let mut body = json!({
        "bits": tnsim::tensornet::format_bits(&bits),
        "open_qubits": a.batch,
        "values": values,
        "width": width,
        "n_slices": slices,
        "peak_rank": result.peak_rank,
    });
    if !a.common.no_timestamp {
        body["wall_time_s"] = json!(wall);
    }
    body["meta"] = meta(cli, &a.common);
    emit_json(&a.common, &body)
}

fn energy(cli: &Cli, a: &EnergyArgs) -> Outcome<()> {
    let graph = load_graph(&a.graph)?;
    let circuit = build_qaoa_circuit(&graph, &a.gammas, &a.betas).invalid("energy")?;
    let report = maxcut_energy(&circuit, &graph, make_orderer(&a.orderer)?.as_ref()).internal("energy")?;
    emit_json(&a.common, &with_meta(&report, meta(cli, &a.common)))
}

fn cost(cli: &Cli, a: &CostProfileArgs) -> Outcome<()> {
    let circuit = load_circuit(&a.circuit)?;
    let n = circuit.num_qubits();
    let net = apply_fixed(&network(&circuit, &vec![0; n], vec![0; n], &[])?);
    let order = order_network(&net, make_orderer(&a.orderer)?.as_ref());
    let profile = cost_profile(&net, &order).internal("cost-profile")?;
    emit(a.common.out.as_deref(), &cost_profile_csv(&profile))?;
    if let Some(out) = &a.common.out {
        let mut text = serde_json::to_string(&meta(cli, &a.common)).internal("serialize")?;
        text.push('\n');
        emit(Some(&meta_path(out)), &text)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::GenGraph(a) => gen_graph(cli, a),
        Command::Qaoa(a) => qaoa(cli, a),
        Command::Order(a) => order(cli, a),
        Command::SlicePlan(a) => slice_plan(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Energy(a) => energy(cli, a),
        Command::CostProfile(a) => cost(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

//! Command-line driver for the loop summarizer.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use loopsum::chc::{parse_program, Program};
use loopsum::pathexpr::StarOrder;
use loopsum::summarize::{self, front, summarize_front, summarize_loops, Front, LoopSummary, Options, ProgramSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Cfg,
    Pathexpr,
    PathProgram,
    Counted,
    Recurrences,
    Rd,
    ClosedForms,
    Summary,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Order {
    File,
    Reverse,
}

/// Summarize the loops of a linear constrained Horn clause program.
#[derive(Parser, Debug)]
#[command(name = "loopsum", version)]
struct Cli {
    /// Program file.
    input: PathBuf,
    /// Entry predicate as PRED/ARITY.
    #[arg(long, value_name = "PRED/AR")]
    entry: Option<String>,
    #[arg(long, value_enum, default_value = "summary")]
    emit: Emit,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, value_enum, default_value = "file")]
    star_order: Order,
    /// Assume every input is nonnegative.
    #[arg(long, default_value = "true", action = clap::ArgAction::Set, value_name = "BOOL")]
    assume_nonneg: bool,
    /// Further sign assumptions, as VAR>=0.
    #[arg(long, value_name = "VAR>=0", num_args = 1..)]
    assume: Vec<String>,
    #[arg(long, default_value = "8", value_name = "N")]
    max_degree: u32,
    /// Side of the check grid [0,N]^m.
    #[arg(long, default_value = "4", value_name = "N")]
    grid: u32,
    /// Give carried counters of inner loops a fresh name per iteration.
    #[arg(long)]
    fresh_counters: bool,
    /// Compare the summary against concrete runs over the grid.
    #[arg(long)]
    check: bool,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("loopsum: {msg}");
    ExitCode::from(2)
}

fn parse_assumption(s: &str) -> Option<String> {
    let v = s.strip_suffix(">=0").unwrap_or(s).trim();
    let ok = v.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    ok.then(|| v.to_string())
}

fn parse_entry(s: &str, p: &Program) -> Result<(String, usize), String> {
    let (name, ar) = s.split_once('/').ok_or_else(|| format!("--entry expects PRED/ARITY, got {s}"))?;
    let ar: usize = ar.parse().map_err(|_| format!("bad arity in --entry {s}"))?;
    if p.arity(name) != Some(ar) {
        return Err(format!("no predicate {name}/{ar} in the program"));
    }
    Ok((name.to_string(), ar))
}

fn options(cli: &Cli) -> Result<Options, String> {
    let assume = cli
        .assume
        .iter()
        .map(|s| parse_assumption(s).ok_or_else(|| format!("--assume expects VAR>=0, got {s}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Options {
        star_order: match cli.star_order {
            Order::File => StarOrder::File,
            Order::Reverse => StarOrder::Reverse,
        },
        assume_nonneg: cli.assume_nonneg,
        assume,
        max_degree: cli.max_degree,
        grid: cli.check.then_some(cli.grid),
        fresh_counters: cli.fresh_counters,
        ..Options::default()
    })
}

/// One emitted stage, in both renderings.
struct Doc {
    name: &'static str,
    text: String,
    json: Value,
}

fn loops_doc(name: &'static str, loops: &[LoopSummary], text: impl Fn(&LoopSummary) -> String, js: impl Fn(&LoopSummary) -> Value) -> Doc {
    let mut t = String::new();
    for l in loops {
        let _ = writeln!(t, "loop {}", l.pred);
        t.push_str(&text(l));
    }
    let j: serde_json::Map<String, Value> = loops.iter().map(|l| (l.pred.clone(), js(l))).collect();
    Doc { name, text: t, json: Value::Object(j) }
}

fn rd_text(l: &LoopSummary) -> String {
    let mut t = String::new();
    for (node, facts) in &l.rd.0 {
        let fs: Vec<String> = facts.iter().map(|(v, e)| format!("({v},{e})")).collect();
        let _ = writeln!(t, "  rd({node}) = {{{}}}", fs.join(", "));
    }
    let consts: Vec<&str> = l.symbolic_constants.iter().map(String::as_str).collect();
    let _ = writeln!(t, "  symbolic constants {{{}}}", consts.join(", "));
    t
}

fn stage_docs(f: &Front, emit: Emit, opts: &Options) -> Result<Vec<Doc>, summarize::SummarizeError> {
    let want = |e: Emit| emit == e || emit == Emit::All;
    let mut docs = Vec::new();
    if want(Emit::Cfg) {
        docs.push(Doc { name: "cfg", text: f.cfg.to_string(), json: serde_json::to_value(&f.cfg).expect("cfg serializes") });
    }
    if want(Emit::Pathexpr) {
        let text = format!("{}\n", f.rewritten);
        docs.push(Doc {
            name: "pathexpr",
            text: if emit == Emit::All { format!("raw {}\nrewritten {text}", f.raw) } else { text },
            json: json!({ "raw": f.raw.to_string(), "rewritten": f.rewritten.to_string() }),
        });
    }
    if want(Emit::PathProgram) {
        docs.push(Doc { name: "path-program", text: f.path_program.to_string(), json: json!(f.path_program.to_string()) });
    }
    if want(Emit::Counted) {
        docs.push(Doc { name: "counted", text: f.counted.program.to_string(), json: json!(f.counted.program.to_string()) });
    }
    let later = [Emit::Recurrences, Emit::Rd, Emit::ClosedForms, Emit::Summary];
    if !later.iter().any(|e| want(*e)) {
        return Ok(docs);
    }
    if want(Emit::Summary) {
        let s = summarize_front(f, opts)?;
        if emit == Emit::All {
            push_loop_docs(&mut docs, &s.loops, emit);
        }
        docs.push(summary_doc(&s));
        if let Some(a) = &s.audit {
            docs.push(Doc { name: "check", text: a.to_string(), json: a.to_json() });
        }
    } else {
        let loops = summarize_loops(f, opts)?;
        push_loop_docs(&mut docs, &loops, emit);
    }
    Ok(docs)
}

fn push_loop_docs(docs: &mut Vec<Doc>, loops: &[LoopSummary], emit: Emit) {
    let want = |e: Emit| emit == e || emit == Emit::All;
    if want(Emit::Recurrences) {
        docs.push(loops_doc("recurrences", loops, |l| l.system.to_string(), |l| l.system.to_json()));
    }
    if want(Emit::Rd) {
        docs.push(loops_doc("rd", loops, rd_text, |l| json!({ "rd": l.rd.to_json(), "symbolic_constants": l.symbolic_constants })));
    }
    if want(Emit::ClosedForms) {
        docs.push(loops_doc(
            "closed-forms",
            loops,
            |l| l.solutions.iter().map(|c| format!("  {c}\n")).collect(),
            |l| Value::Array(l.solutions.iter().map(|c| c.to_json()).collect()),
        ));
    }
}

fn summary_doc(s: &ProgramSummary) -> Doc {
    Doc { name: "summary", text: s.to_string(), json: s.to_json() }
}

fn render(docs: &[Doc], format: Format, single: bool) -> String {
    match format {
        Format::Text if single => docs.iter().map(|d| d.text.clone()).collect::<Vec<_>>().join("\n"),
        Format::Text => docs.iter().map(|d| format!("== {}\n{}", d.name, d.text)).collect::<Vec<_>>().join("\n"),
        Format::Json if single && docs.len() == 1 => format!("{:#}\n", docs[0].json),
        Format::Json => {
            let m: serde_json::Map<String, Value> = docs.iter().map(|d| (d.name.to_string(), d.json.clone())).collect();
            format!("{:#}\n", Value::Object(m))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("LOOPSUM_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let text = match std::fs::read_to_string(&cli.input) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read {}: {e}", cli.input.display())),
    };
    let mut program = match parse_program(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("loopsum: parse: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(entry) = &cli.entry {
        match parse_entry(entry, &program) {
            Ok(e) => program.entry = e,
            Err(m) => return usage(m),
        }
    }
    let opts = match options(&cli) {
        Ok(o) => o,
        Err(m) => return usage(m),
    };
    log::info!("entry {}/{}", program.entry.0, program.entry.1);
    let result = front(&program, &opts).and_then(|f| {
        let emit = if cli.check && cli.emit != Emit::All { Emit::Summary } else { cli.emit };
        let mut docs = stage_docs(&f, emit, &opts)?;
        if cli.check && cli.emit != Emit::All && cli.emit != Emit::Summary {
            docs.retain(|d| d.name == "check");
            let mut before = stage_docs(&f, cli.emit, &Options { grid: None, ..opts.clone() })?;
            before.append(&mut docs);
            docs = before;
        }
        Ok(docs)
    });
    match result {
        Ok(docs) => {
            print!("{}", render(&docs, cli.format, docs.len() == 1 || (cli.emit != Emit::All && !cli.check)));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("loopsum: {e}");
            ExitCode::from(1)
        }
    }
}

//! The `cal` command line: `check`, `eval`, `horn` and `aggregate`.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::aggregate::{self, network, EnvFile, LatencyModel};
use crate::clauses::{declarations_from_source, evaluate_box, BoxDeclaration};
use crate::error::{CalError, Diagnostic, Result, Severity};
use crate::horn::{export_horn, Dialect};
use crate::terms::Session;
use crate::unify::BindingStore;

#[derive(Debug, Parser)]
#[command(name = "cal", version, about = "Check, evaluate, export and aggregate CAL box declarations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Exit with status 2 when there are warnings.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DialectArg {
    Prolog,
    Cal,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, flatten and vocabulary-check declarations.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluate one box against an environment file.
    Eval {
        file: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        /// Box to evaluate; may be omitted when the file declares one box.
        #[arg(long = "box")]
        box_name: Option<String>,
    },
    /// Print the Horn-clause form of every declaration.
    Horn {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = DialectArg::Prolog)]
        dialect: DialectArg,
    },
    /// Aggregate constraints over a network.
    Aggregate {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Warnings,
    Errors,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoxSummary {
    /// Box name, or `Name#id` for a network instance.
    pub name: String,
    pub clauses: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fired: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unfired: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    /// Owning box or instance.
    pub owner: String,
    pub variable: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoreReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fired: Option<Vec<usize>>,
    pub bindings: Vec<Binding>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<ChannelReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelReport {
    pub entry: String,
    pub source: String,
    pub index: usize,
    pub fields: Vec<String>,
    pub latency: String,
    pub messages: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub boxes: Vec<BoxSummary>,
    pub stores: Vec<StoreReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Report {
    fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            status: Status::Ok,
            boxes: Vec::new(),
            stores: Vec::new(),
            text: None,
            diagnostics: Vec::new(),
        }
    }

    fn finish(mut self) -> Self {
        let worst = self.diagnostics.iter().map(|d| d.severity).max();
        self.status = match worst {
            Some(Severity::Error) => Status::Errors,
            Some(Severity::Warning) => Status::Warnings,
            _ => Status::Ok,
        };
        self
    }

    fn failed(command: &str, e: CalError) -> Self {
        let mut r = Report::new(command);
        let mut d = Diagnostic::error(e.to_string());
        d.pos = e.pos();
        r.diagnostics.push(d);
        r.finish()
    }

    pub fn exit_code(&self, strict: bool) -> i32 {
        match self.status {
            Status::Errors => 1,
            Status::Warnings if strict => 2,
            _ => 0,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Text => self.to_string(),
        }
    }
}

fn list(xs: &[usize]) -> String {
    if xs.is_empty() {
        "none".to_string()
    } else {
        xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(text) = &self.text {
            f.write_str(text)?;
        }
        writeln!(f, "{}: {:?}", self.command, self.status)?;
        for b in &self.boxes {
            write!(f, "box {} ({} clauses)", b.name, b.clauses)?;
            if let Some(fired) = &b.fired {
                write!(f, ": fired {}", list(fired))?;
            }
            if let Some(unfired) = &b.unfired {
                write!(f, "; unfired {}", list(unfired))?;
            }
            writeln!(f)?;
        }
        for (i, s) in self.stores.iter().enumerate() {
            write!(f, "store {}", i + 1)?;
            if let Some(fired) = &s.fired {
                write!(f, " (fired {})", list(fired))?;
            }
            writeln!(f)?;
            let owner_w = s.bindings.iter().map(|b| b.owner.len()).max().unwrap_or(0);
            let var_w = s.bindings.iter().map(|b| b.variable.len()).max().unwrap_or(0);
            for b in &s.bindings {
                writeln!(f, "  {:owner_w$}  {:var_w$} = {}", b.owner, b.variable, b.value)?;
            }
            for c in &s.channels {
                writeln!(
                    f,
                    "  channel {}[{}] ({}) from {}: latency {}; messages {}",
                    c.source,
                    c.index,
                    c.fields.join(", "),
                    c.entry,
                    c.latency,
                    c.messages
                )?;
            }
        }
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CalError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_decls(path: &Path, session: &mut Session) -> Result<(Vec<BoxDeclaration>, Vec<Diagnostic>)> {
    let shown = path.display().to_string();
    let src = read(path)?;
    let (decls, diags) = declarations_from_source(&src, session).map_err(|e| e.in_file(&shown))?;
    let diags = diags.into_iter().map(|d| in_file(&shown, d)).collect();
    Ok((decls, diags))
}

fn in_file(path: &str, d: Diagnostic) -> Diagnostic {
    Diagnostic {
        message: format!("{path}: {}", d.message),
        ..d
    }
}

fn owned(owner: &str, d: Diagnostic) -> Diagnostic {
    Diagnostic {
        message: format!("{owner}: {}", d.message),
        ..d
    }
}

pub fn cmd_check(files: &[PathBuf]) -> Report {
    let mut r = Report::new("check");
    let mut session = Session::new();
    for path in files {
        match load_decls(path, &mut session) {
            Ok((decls, diags)) => {
                r.diagnostics.extend(diags);
                let shown = path.display().to_string();
                for d in decls {
                    for c in &d.clauses {
                        for p in c.conditions.iter().chain(&c.assertions) {
                            for t in p.terms() {
                                r.diagnostics.extend(
                                    aggregate::vocab::check_vocabulary(t)
                                        .into_iter()
                                        .map(|x| in_file(&shown, x.at(p.pos()))),
                                );
                            }
                        }
                    }
                    r.boxes.push(BoxSummary {
                        name: d.name.clone(),
                        clauses: d.clauses.len(),
                        fired: None,
                        unfired: None,
                    });
                }
            }
            Err(e) => {
                let mut d = Diagnostic::error(e.to_string());
                d.pos = e.pos();
                r.diagnostics.push(d);
            }
        }
    }
    crate::error::dedup_diagnostics(&mut r.diagnostics);
    r.finish()
}

fn bindings_of(store: &BindingStore, owner: &dyn Fn(u32) -> String) -> Vec<Binding> {
    let mut rows: Vec<(u32, Binding)> = store
        .named_projection()
        .into_iter()
        .map(|(v, t)| {
            let b = Binding {
                owner: owner(v.scope),
                variable: v.to_string(),
                value: t.to_string(),
            };
            (v.scope, b)
        })
        .collect();
    rows.sort_by(|a, b| (a.0, &a.1.variable).cmp(&(b.0, &b.1.variable)));
    rows.into_iter().map(|(_, b)| b).collect()
}

pub fn cmd_eval(file: &Path, env: Option<&Path>, box_name: Option<&str>) -> Report {
    let run = || -> Result<Report> {
        let mut r = Report::new("eval");
        let (decls, diags) = load_decls(file, &mut Session::new())?;
        r.diagnostics.extend(diags);
        let decl = match box_name {
            Some(n) => decls
                .iter()
                .find(|d| d.name == n)
                .ok_or_else(|| CalError::Aggregation(format!("no box named {n}")))?,
            None if decls.len() == 1 => &decls[0],
            None => {
                return Err(CalError::Aggregation(format!(
                    "{} declares {} boxes; choose one with --box",
                    file.display(),
                    decls.len()
                )))
            }
        };
        let env = match env {
            Some(p) => network::load_env(p)?,
            None => EnvFile::default(),
        };
        r.diagnostics.extend(env.unused_entries(&[decl]));
        let mut inputs = BindingStore::new();
        env.bind_instance(decl, 0, true, &mut inputs);
        let ev = evaluate_box(decl, &inputs);
        let name = decl.name.clone();
        let mut fired: Vec<usize> = ev.branches.iter().flat_map(|b| b.fired.iter().copied()).collect();
        fired.sort_unstable();
        fired.dedup();
        r.boxes.push(BoxSummary {
            name: name.clone(),
            clauses: decl.clauses.len(),
            fired: Some(fired),
            unfired: Some(ev.unfired.clone()),
        });
        for b in &ev.branches {
            r.stores.push(StoreReport {
                fired: Some(b.fired.clone()),
                bindings: bindings_of(&b.store, &|_| name.clone()),
                channels: Vec::new(),
            });
        }
        r.diagnostics.extend(ev.diagnostics.into_iter().map(|d| owned(&name, d)));
        Ok(r.finish())
    };
    run().unwrap_or_else(|e| Report::failed("eval", e))
}

pub fn cmd_horn(files: &[PathBuf], dialect: Dialect) -> Report {
    let run = || -> Result<Report> {
        let mut r = Report::new("horn");
        let mut session = Session::new();
        let mut text = String::new();
        for path in files {
            let (decls, diags) = load_decls(path, &mut session)?;
            r.diagnostics.extend(diags);
            if !text.is_empty() {
                text.push('\n');
            }
            text.push_str(&export_horn(&decls, dialect));
        }
        r.text = Some(text);
        Ok(r.finish())
    };
    run().unwrap_or_else(|e| Report::failed("horn", e))
}

fn channel_reports(m: &LatencyModel) -> Vec<ChannelReport> {
    m.channels
        .iter()
        .map(|c| ChannelReport {
            entry: c.entry.to_string(),
            source: c.source.to_string(),
            index: c.index,
            fields: c.fields.clone(),
            latency: c.latency.to_string(),
            messages: c.messages.to_string(),
        })
        .collect()
}

pub fn cmd_aggregate(net: &Path, env: Option<&Path>) -> Report {
    let run = || -> Result<Report> {
        let mut r = Report::new("aggregate");
        let (net, diags) = network::load_network(net)?;
        r.diagnostics.extend(diags);
        let env = match env {
            Some(p) => network::load_env(p)?,
            None => EnvFile::default(),
        };
        let result = aggregate::aggregate_functional(&net, &env)?;
        let insts = net.instances();
        let owner = |scope: u32| {
            insts
                .iter()
                .find(|i| i.id == scope)
                .map_or_else(|| net.name.clone(), |i| i.to_string())
        };
        for s in &result.instances {
            r.boxes.push(BoxSummary {
                name: s.instance.to_string(),
                clauses: net.decl(&s.instance.box_name)?.clauses.len(),
                fired: Some(s.fired.clone()),
                unfired: Some(s.unfired.clone()),
            });
        }
        r.diagnostics.extend(result.diagnostics);
        for store in &result.stores {
            let (model, diags) = aggregate::aggregate_extrafunctional(&net, store);
            r.diagnostics.extend(diags);
            r.stores.push(StoreReport {
                fired: None,
                bindings: bindings_of(store, &owner),
                channels: channel_reports(&model),
            });
        }
        crate::error::dedup_diagnostics(&mut r.diagnostics);
        Ok(r.finish())
    };
    run().unwrap_or_else(|e| Report::failed("aggregate", e))
}

pub fn execute(cli: &Cli) -> Report {
    match &cli.command {
        Command::Check { files } => cmd_check(files),
        Command::Eval { file, env, box_name } => cmd_eval(file, env.as_deref(), box_name.as_deref()),
        Command::Horn { files, dialect } => cmd_horn(
            files,
            match dialect {
                DialectArg::Prolog => Dialect::Prolog,
                DialectArg::Cal => Dialect::Cal,
            },
        ),
        Command::Aggregate { net, env } => cmd_aggregate(net, env.as_deref()),
    }
}

/// Parse arguments, run, write the report, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let report = execute(&cli);
    let mut rendered = report.render(cli.format);
    // horn text goes out bare in text mode
    if cli.format == Format::Text && report.text.is_some() {
        rendered = report.text.clone().unwrap_or_default();
        for d in &report.diagnostics {
            eprintln!("{d}");
        }
    }
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &rendered) {
                eprintln!("{}: {e}", p.display());
                return 1;
            }
        }
        None => print!("{rendered}"),
    }
    report.exit_code(cli.strict)
}

//! SMT-LIB 2 export of the strict sign constraints and import of solver models.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::{Command, Stdio};

use ndarray::Array2;

use super::{FeasibilityOutcome, Method, Status, Witness};
use crate::error::{Error, Result};
use crate::sign_matrix::{PartialSignMatrix, Sign};

fn comment_var(i: usize, k: usize) -> String {
    format!("c_{i}_{k}")
}

fn voter_var(j: usize, k: usize) -> String {
    format!("v_{j}_{k}")
}

/// Script over real arithmetic with one strict inequality per observed vote.
///
/// Variables are `c_<i>_<k>` and `v_<j>_<k>`; assertions follow `(i, j)` order.
pub fn emit_smt_constraints(m: &PartialSignMatrix, r: usize) -> Result<String> {
    if r == 0 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut out = String::new();
    writeln!(
        out,
        "; sign constraints: {} comments, {} voters, {} votes, r = {r}",
        m.n_comments(),
        m.n_voters(),
        m.n_observed()
    )
    .unwrap();
    out.push_str("(set-logic QF_NRA)\n");
    for i in 0..m.n_comments() {
        for k in 0..r {
            writeln!(out, "(declare-fun {} () Real)", comment_var(i, k)).unwrap();
        }
    }
    for j in 0..m.n_voters() {
        for k in 0..r {
            writeln!(out, "(declare-fun {} () Real)", voter_var(j, k)).unwrap();
        }
    }
    for (i, j, s) in m.entries() {
        let terms: Vec<String> = (0..r)
            .map(|k| format!("(* {} {})", comment_var(i, k), voter_var(j, k)))
            .collect();
        let sum = if r == 1 {
            terms.into_iter().next().unwrap()
        } else {
            format!("(+ {})", terms.join(" "))
        };
        let op = match s {
            Sign::Plus => ">",
            Sign::Minus => "<",
        };
        writeln!(out, "(assert ({op} {sum} 0.0))").unwrap();
    }
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
            ';' => {
                // comment to end of line
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for tok in tokenize(text) {
        match tok.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let list = stack.pop().expect("stack never empty");
                stack
                    .last_mut()
                    .ok_or_else(|| Error::Parse("unbalanced ')' in solver output".into()))?
                    .push(Sexp::List(list));
            }
            _ => stack
                .last_mut()
                .expect("stack never empty")
                .push(Sexp::Atom(tok)),
        }
    }
    if stack.len() != 1 {
        return Err(Error::Parse("unbalanced '(' in solver output".into()));
    }
    Ok(stack.pop().unwrap())
}

fn parse_number(atom: &str) -> Result<f64> {
    // z3 marks decimal approximations of irrationals with a trailing '?'
    atom.trim_end_matches('?')
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: {atom:?}")))
}

fn eval(expr: &Sexp) -> Result<f64> {
    match expr {
        Sexp::Atom(a) => parse_number(a),
        Sexp::List(items) => {
            let (head, args) = match items.split_first() {
                Some((Sexp::Atom(h), rest)) => (h.as_str(), rest),
                _ => return Err(Error::Parse("malformed value expression".into())),
            };
            let vals = args.iter().map(eval).collect::<Result<Vec<f64>>>()?;
            match (head, vals.as_slice()) {
                ("-", [x]) => Ok(-x),
                ("-", [x, rest @ ..]) => Ok(rest.iter().fold(*x, |acc, y| acc - y)),
                ("+", xs) => Ok(xs.iter().sum()),
                ("*", xs) => Ok(xs.iter().product()),
                ("/", [x, y]) => Ok(x / y),
                ("root-obj", _) => Err(Error::Parse(
                    "algebraic numbers (root-obj) are not supported".into(),
                )),
                (op, _) => Err(Error::Parse(format!(
                    "unsupported operator {op:?} in model value"
                ))),
            }
        }
    }
}

/// Collects `(define-fun name () Real value)` definitions anywhere in `sexps`.
fn collect_definitions(sexps: &[Sexp], out: &mut HashMap<String, f64>) -> Result<()> {
    for s in sexps {
        if let Sexp::List(items) = s {
            if let [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(params), Sexp::Atom(_sort), value] =
                items.as_slice()
            {
                if kw == "define-fun" && params.is_empty() {
                    out.insert(name.clone(), eval(value)?);
                    continue;
                }
            }
            collect_definitions(items, out)?;
        }
    }
    Ok(())
}

/// Builds a witness from solver model text and checks it against `m`.
pub fn parse_smt_model(text: &str, m: &PartialSignMatrix, r: usize) -> Result<Witness> {
    let sexps = parse_sexps(text)?;
    let mut values = HashMap::new();
    collect_definitions(&sexps, &mut values)?;
    let lookup = |name: String| -> Result<f64> {
        values
            .get(&name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("model does not define {name}")))
    };
    let mut c = Array2::zeros((m.n_comments(), r));
    for i in 0..m.n_comments() {
        for k in 0..r {
            c[[i, k]] = lookup(comment_var(i, k))?;
        }
    }
    let mut v = Array2::zeros((m.n_voters(), r));
    for j in 0..m.n_voters() {
        for k in 0..r {
            v[[j, k]] = lookup(voter_var(j, k))?;
        }
    }
    let w = Witness { c, v };
    w.validate(m)?;
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverVerdict {
    /// Satisfiable; carries the text following the verdict line.
    Sat(String),
    Unsat,
    Unknown,
}

/// Splits solver stdout into the `check-sat` verdict and the model text.
pub fn parse_solver_output(text: &str) -> Result<SolverVerdict> {
    let trimmed = text.trim_start();
    let (first, rest) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
    match first.trim() {
        "sat" => Ok(SolverVerdict::Sat(rest.to_string())),
        "unsat" => Ok(SolverVerdict::Unsat),
        "unknown" => Ok(SolverVerdict::Unknown),
        other => Err(Error::Parse(format!("unexpected solver verdict {other:?}"))),
    }
}

/// A command line SMT solver reading the script on standard input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalSolver {
    pub fn z3() -> Self {
        ExternalSolver {
            program: "z3".into(),
            args: vec!["-in".into(), "-smt2".into()],
        }
    }

    /// Parses a whitespace separated command line, e.g. `"z3 -in -smt2"`.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidParams("empty solver command".into()))?;
        Ok(ExternalSolver {
            program,
            args: parts.collect(),
        })
    }

    pub fn is_available(&self) -> bool {
        Command::new(&self.program)
            .arg("--version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map(|s| s.success())
            .unwrap_or(false)
    }

    pub fn run(&self, script: &str) -> Result<String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Solver(format!("cannot start {}: {e}", self.program)))?;
        child
            .stdin
            .take()
            .expect("stdin is piped")
            .write_all(script.as_bytes())?;
        let output = child.wait_with_output()?;
        let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
        if stdout.trim().is_empty() {
            return Err(Error::Solver(format!(
                "{} produced no output: {}",
                self.program,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(stdout)
    }

    /// Exact feasibility check at dimension `r`.
    pub fn check(&self, m: &PartialSignMatrix, r: usize) -> Result<FeasibilityOutcome> {
        let script = emit_smt_constraints(m, r)?;
        let status = match parse_solver_output(&self.run(&script)?)? {
            SolverVerdict::Sat(model) => Status::Feasible {
                witness: parse_smt_model(&model, m, r)?,
            },
            SolverVerdict::Unsat => Status::InfeasibleCertified,
            SolverVerdict::Unknown => Status::Unknown,
        };
        Ok(FeasibilityOutcome {
            status,
            method: Method::ExternalSolver,
            r,
        })
    }
}

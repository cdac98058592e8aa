//! OpenQASM 2 export of the basis-state transfer circuit.

use std::fmt::Write as _;

use qconv_core::field::ProblemSpec;
use qconv_core::quantum::EvolutionLayer;

use crate::error::CliError;

/// Circuit for `layers` convection steps on `spec`'s register.
///
/// Qubits set in `basis` are flipped with `ry(pi)` first. Each layer is one
/// `rz` per qubit; a `barrier` separates consecutive layers so the compiler
/// cannot merge them. All qubits are measured at the end. The global phase
/// of the layer is not observable and is omitted.
pub fn export_qasm(spec: &ProblemSpec, layers: usize, basis: Option<usize>) -> Result<String, CliError> {
    spec.validate()?;
    if layers == 0 {
        return Err(CliError::config("export-qasm needs at least one layer"));
    }
    let n = spec.qubits();
    if let Some(b) = basis {
        if b >= spec.points {
            return Err(CliError::config(format!("basis state {b} does not fit in {n} qubits")));
        }
    }
    let layer = EvolutionLayer::for_spec(spec);
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{n}];");
    let _ = writeln!(out, "creg c[{n}];");
    if let Some(b) = basis {
        for q in 0..n {
            if b >> q & 1 == 1 {
                let _ = writeln!(out, "ry(pi) q[{q}];");
            }
        }
    }
    for l in 0..layers {
        if l > 0 {
            out.push_str("barrier q;\n");
        }
        for (q, angle) in layer.angles.iter().enumerate() {
            let _ = writeln!(out, "rz({angle:.16e}) q[{q}];");
        }
    }
    for q in 0..n {
        let _ = writeln!(out, "measure q[{q}] -> c[{q}];");
    }
    Ok(out)
}

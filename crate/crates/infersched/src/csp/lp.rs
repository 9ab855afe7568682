//! CPLEX-LP-format export of a CspInstance and import of external solver
//! assignments from plain `variable value` files.

use super::{BatchPlan, CspError, CspInstance, Optimality, ScheduleSolution};
use crate::domain::Tokens;
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// Writes a long expression wrapped at term boundaries (LP lines must not
/// split tokens).
fn write_wrapped<W: Write>(out: &mut W, line: &str) -> std::io::Result<()> {
    let mut current = String::new();
    for piece in line.split_inclusive(" + ") {
        if current.len() + piece.len() > 200 && !current.is_empty() {
            writeln!(out, "{}", current.trim_end())?;
            current = String::from("   ");
        }
        current.push_str(piece);
    }
    writeln!(out, "{}", current.trim_end())
}

fn num(x: f64) -> String {
    let s = format!("{x:.15}");
    // Trim trailing zeros but keep at least one decimal digit for stability.
    let trimmed = s.trim_end_matches('0');
    if trimmed.ends_with('.') { format!("{trimmed}0") } else { trimmed.to_string() }
}

/// Writes the instance as a CPLEX LP file. Output is byte-stable for
/// identical instances. Variables are 1-based: `s_i_j`, `m_i_j`, `c_i_j`
/// (integers), `g_i_j`, `e_i_j`, `d_i_j`, `u_j` (binaries).
pub fn export_lp<W: Write>(instance: &CspInstance, mut out: W) -> Result<(), CspError> {
    let w = instance.requests.len();
    let j_max = instance.j_max;
    let big_m = instance.big_m;
    let sur = instance.surrogate;
    let c_cap = instance.token_limit;
    let m_cap = instance.m_capacity;

    writeln!(out, "\\ Batch scheduling instance: {w} requests, horizon {j_max} batches")?;
    writeln!(out, "\\ C = {c_cap}, M = {m_cap}, S = {}, bigM = {big_m}", instance.context_size)?;
    writeln!(
        out,
        "\\ Objective is a linear surrogate gamma*u_j + alpha*sum_c + beta*sum_m_before;"
    )?;
    writeln!(
        out,
        "\\ the quadratic prefill term of the fitted cost model is not representable"
    )?;
    writeln!(out, "\\ here, so LP optima lower-bound but may not equal true-cost optima.")?;

    writeln!(out, "Minimize")?;
    let mut obj = String::from(" obj:");
    for j in 1..=j_max {
        obj.push_str(&format!(" + {} u_{j}", num(sur.gamma)));
    }
    for i in 1..=w {
        for j in 1..=j_max {
            obj.push_str(&format!(" + {} c_{i}_{j}", num(sur.alpha)));
        }
    }
    for i in 1..=w {
        for j in 2..=j_max {
            // Batch j reads the cache left after batch j-1.
            obj.push_str(&format!(" + {} m_{i}_{}", num(sur.beta), j - 1));
        }
    }
    write_wrapped(&mut out, &obj)?;

    writeln!(out, "Subject To")?;
    for (idx, r) in instance.requests.iter().enumerate() {
        let i = idx + 1;
        let input = r.input_len;
        let output = r.output_len;
        for j in 1..=j_max {
            if j == 1 {
                writeln!(out, " mono_{i}_{j}: s_{i}_{j} - g_{i}_{j} = {input}")?;
                writeln!(out, " meml_{i}_{j}: m_{i}_{j} - c_{i}_{j} + {big_m} e_{i}_{j} + {big_m} d_{i}_{j} >= 0")?;
                writeln!(out, " memu_{i}_{j}: m_{i}_{j} - c_{i}_{j} - {big_m} e_{i}_{j} - {big_m} d_{i}_{j} <= 0")?;
                writeln!(out, " tok_{i}_{j}: c_{i}_{j} <= {input}")?;
                writeln!(out, " genf_{i}_{j}: g_{i}_{j} - c_{i}_{j} >= {}", 1i64 - input as i64)?;
                writeln!(
                    out,
                    " genb_{i}_{j}: {big_m} g_{i}_{j} - c_{i}_{j} <= {}",
                    big_m as i64 - input as i64
                )?;
            } else {
                let p = j - 1;
                writeln!(out, " mono_{i}_{j}: s_{i}_{j} - s_{i}_{p} - g_{i}_{j} = 0")?;
                writeln!(out, " meml_{i}_{j}: m_{i}_{j} - m_{i}_{p} - c_{i}_{j} + {big_m} e_{i}_{j} + {big_m} d_{i}_{j} >= 0")?;
                writeln!(out, " memu_{i}_{j}: m_{i}_{j} - m_{i}_{p} - c_{i}_{j} - {big_m} e_{i}_{j} - {big_m} d_{i}_{j} <= 0")?;
                writeln!(out, " tok_{i}_{j}: c_{i}_{j} - s_{i}_{p} + m_{i}_{p} <= 0")?;
                writeln!(out, " genf_{i}_{j}: s_{i}_{p} - m_{i}_{p} - c_{i}_{j} + g_{i}_{j} >= 1")?;
                writeln!(
                    out,
                    " genb_{i}_{j}: s_{i}_{p} - m_{i}_{p} - c_{i}_{j} + {big_m} g_{i}_{j} <= {big_m}"
                )?;
                writeln!(out, " dproc_{i}_{j}: c_{i}_{j} + {big_m} d_{i}_{p} <= {big_m}")?;
                writeln!(out, " devict_{i}_{j}: e_{i}_{j} + d_{i}_{p} <= 1")?;
            }
            writeln!(out, " egate_{i}_{j}: m_{i}_{j} + {big_m} e_{i}_{j} <= {big_m}")?;
            writeln!(out, " cgate_{i}_{j}: c_{i}_{j} + {big_m} e_{i}_{j} <= {big_m}")?;
            writeln!(out, " dmem_{i}_{j}: m_{i}_{j} + {big_m} d_{i}_{j} <= {big_m}")?;
            let gsum: String =
                (1..=j).map(|jj| format!(" + g_{i}_{jj}")).collect();
            write_wrapped(&mut out, &format!(" donef_{i}_{j}:{gsum} - d_{i}_{j} <= {}", output as i64 - 1))?;
            write_wrapped(&mut out, &format!(" doneu_{i}_{j}: {output} d_{i}_{j}{} <= 0", gsum.replace('+', "-")))?;
        }
        let gall: String = (1..=j_max).map(|j| format!(" + g_{i}_{j}")).collect();
        write_wrapped(&mut out, &format!(" term_{i}:{gall} = {output}"))?;
    }
    for j in 1..=j_max {
        let csum: String = (1..=w).map(|i| format!(" + c_{i}_{j}")).collect();
        write_wrapped(&mut out, &format!(" batchc_{j}:{csum} <= {c_cap}"))?;
        let msum: String = (1..=w).map(|i| format!(" + m_{i}_{j}")).collect();
        write_wrapped(&mut out, &format!(" batchm_{j}:{msum} <= {m_cap}"))?;
        for i in 1..=w {
            writeln!(out, " ulink_{i}_{j}: c_{i}_{j} - {big_m} u_{j} <= 0")?;
        }
    }
    if let Some(cap) = instance.options.latency_cap {
        let mut line = String::from(" cap:");
        for j in 1..=j_max {
            line.push_str(&format!(" + {} u_{j}", num(sur.gamma)));
        }
        for i in 1..=w {
            for j in 1..=j_max {
                line.push_str(&format!(" + {} c_{i}_{j}", num(sur.alpha)));
            }
            for j in 2..=j_max {
                line.push_str(&format!(" + {} m_{i}_{}", num(sur.beta), j - 1));
            }
        }
        line.push_str(&format!(" <= {}", num(cap)));
        write_wrapped(&mut out, &line)?;
    }
    if instance.options.online {
        for j in 1..=j_max {
            let mut line = format!(" accdef_{j}: acc_{j}");
            if j > 1 {
                line.push_str(&format!(" - acc_{}", j - 1));
            }
            line.push_str(&format!(" - {} u_{j}", num(sur.gamma)));
            for i in 1..=w {
                line.push_str(&format!(" - {} c_{i}_{j}", num(sur.alpha)));
                if j > 1 {
                    line.push_str(&format!(" - {} m_{i}_{}", num(sur.beta), j - 1));
                }
            }
            writeln!(out, "{line} = 0")?;
        }
        for (idx, r) in instance.requests.iter().enumerate() {
            if r.arrival_time <= 0.0 {
                continue;
            }
            let i = idx + 1;
            for j in 1..=j_max {
                if j > 1 {
                    writeln!(out, " amono_{i}_{j}: a_{i}_{} - a_{i}_{j} <= 0", j - 1)?;
                    writeln!(
                        out,
                        " aarr_{i}_{j}: {} a_{i}_{j} - acc_{} <= 0",
                        num(r.arrival_time),
                        j - 1
                    )?;
                } else {
                    writeln!(out, " aarr_{i}_{j}: {} a_{i}_{j} <= 0", num(r.arrival_time))?;
                }
                writeln!(out, " agate_{i}_{j}: c_{i}_{j} - {big_m} a_{i}_{j} <= 0")?;
            }
        }
    }

    writeln!(out, "Bounds")?;
    for (idx, r) in instance.requests.iter().enumerate() {
        let i = idx + 1;
        let s_hi = r.input_len + r.output_len;
        let peak = s_hi - 1;
        let m_hi = peak.min(m_cap).min(instance.context_size);
        let c_hi = peak.min(c_cap).min(instance.context_size);
        for j in 1..=j_max {
            writeln!(out, " 0 <= s_{i}_{j} <= {s_hi}")?;
            writeln!(out, " 0 <= m_{i}_{j} <= {m_hi}")?;
            writeln!(out, " 0 <= c_{i}_{j} <= {c_hi}")?;
            if instance.options.forbid_eviction {
                writeln!(out, " e_{i}_{j} = 0")?;
            }
        }
    }

    writeln!(out, "Generals")?;
    for i in 1..=w {
        for j in 1..=j_max {
            writeln!(out, " s_{i}_{j} m_{i}_{j} c_{i}_{j}")?;
        }
    }
    writeln!(out, "Binaries")?;
    for i in 1..=w {
        for j in 1..=j_max {
            writeln!(out, " g_{i}_{j} e_{i}_{j} d_{i}_{j}")?;
        }
    }
    for j in 1..=j_max {
        writeln!(out, " u_{j}")?;
    }
    if instance.options.online {
        for (idx, r) in instance.requests.iter().enumerate() {
            if r.arrival_time <= 0.0 {
                continue;
            }
            for j in 1..=j_max {
                writeln!(out, " a_{}_{j}", idx + 1)?;
            }
        }
    }
    writeln!(out, "End")?;
    Ok(())
}

/// Reads a `variable value` whitespace-separated assignment file. Lines
/// starting with `#` and blank lines are skipped.
pub fn parse_solution_vars<R: BufRead>(reader: R) -> Result<HashMap<String, f64>, CspError> {
    let mut vars = HashMap::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value)) = (parts.next(), parts.next()) else {
            return Err(CspError::BadSolutionFile(format!("line {}: `{line}`", line_no + 1)));
        };
        let value: f64 = value.parse().map_err(|_| {
            CspError::BadSolutionFile(format!("line {}: bad value `{value}`", line_no + 1))
        })?;
        vars.insert(name.to_string(), value);
    }
    Ok(vars)
}

/// Reconstructs a schedule from an external solver's variable assignment.
/// Only `c_i_j` and `e_i_j` are needed; everything else is re-derived.
pub fn solution_from_assignment(
    instance: &CspInstance,
    vars: &HashMap<String, f64>,
) -> Result<ScheduleSolution, CspError> {
    let w = instance.requests.len();
    let mut plan: Vec<BatchPlan> = Vec::new();
    let mut m: Vec<Tokens> = vec![0; w];
    let mut objective = 0.0;
    for j in 1..=instance.j_max {
        let mut batch = BatchPlan::default();
        let mut sum_m_before: Tokens = m.iter().sum();
        for i in 1..=w {
            if vars.get(&format!("e_{i}_{j}")).copied().unwrap_or(0.0) >= 0.5 {
                if m[i - 1] > 0 {
                    batch.evictions.push(i - 1);
                }
                sum_m_before -= m[i - 1];
                m[i - 1] = 0;
            }
        }
        let mut sum_c: Tokens = 0;
        for i in 1..=w {
            let c = vars.get(&format!("c_{i}_{j}")).copied().unwrap_or(0.0).round() as Tokens;
            if c > 0 {
                batch.entries.push((i - 1, c));
                m[i - 1] += c;
                sum_c += c;
            }
        }
        objective += instance.surrogate.batch_cost(sum_c, sum_m_before);
        if !batch.entries.is_empty() || !batch.evictions.is_empty() {
            plan.push(batch);
        }
    }
    Ok(ScheduleSolution { plan, objective, status: Optimality::Feasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{build_instance, CostSurrogate, CspOptions};
    use crate::workload::WorkloadSpec;

    fn tiny_instance() -> CspInstance {
        let workload = WorkloadSpec::fixed(1, 1, 1).generate(4096).unwrap();
        build_instance(
            &workload,
            CostSurrogate { gamma: 1.0, alpha: 0.001, beta: 0.0001 },
            4096,
            100,
            4096,
            CspOptions { j_max: Some(2), ..Default::default() },
        )
        .unwrap()
    }

    fn render(instance: &CspInstance) -> String {
        let mut buf = Vec::new();
        export_lp(instance, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn smallest_instance_has_expected_lines() {
        let text = render(&tiny_instance());
        assert!(text.contains("Minimize"));
        assert!(text.contains(" term_1: + g_1_1 + g_1_2 = 1"));
        assert!(text.contains("Binaries"));
        assert!(text.contains(" g_1_1 e_1_1 d_1_1"));
        assert!(text.contains(" batchc_1: + c_1_1 <= 4096"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn export_is_byte_stable() {
        let a = render(&tiny_instance());
        let b = render(&tiny_instance());
        assert_eq!(a, b);
    }

    #[test]
    fn forbid_eviction_pins_e_to_zero() {
        let mut instance = tiny_instance();
        instance.options.forbid_eviction = true;
        assert!(render(&instance).contains(" e_1_1 = 0"));
    }

    #[test]
    fn solution_file_roundtrip() {
        let text = "# solver output\nc_1_1 1\ng_1_1 1.0\nu_1 1\n\ne_1_2 0\n";
        let vars = parse_solution_vars(text.as_bytes()).unwrap();
        assert_eq!(vars["c_1_1"], 1.0);
        let solution = solution_from_assignment(&tiny_instance(), &vars).unwrap();
        assert_eq!(solution.plan.len(), 1);
        assert_eq!(solution.plan[0].entries, vec![(0, 1)]);
        assert!((solution.objective - 1.001).abs() < 1e-12);
    }

    #[test]
    fn malformed_solution_line_reports_position() {
        let err = parse_solution_vars("c_1_1 notanumber\n".as_bytes());
        assert!(matches!(err, Err(CspError::BadSolutionFile(msg)) if msg.contains("line 1")));
    }
}

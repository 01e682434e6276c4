//! Fixed-format MPS output for the linear programs built by the solver, so
//! they can be cross-checked with an external code.

use std::io::{self, Write};

use riskbound_core::lp::{LinearProgram, Relation, Sense};

/// Shortest rendering of `v` that fits the 12-column numeric field.
fn number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for digits in (0..=8).rev() {
        let s = format!("{v:.digits$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

fn entry(out: &mut impl Write, col: &str, row: &str, v: f64) -> io::Result<()> {
    writeln!(out, "    {col:<8}  {row:<8}  {:<12}", number(v))
}

/// Rows are named `R1..`, columns `C1..`, the objective `COST`.
pub fn write_mps(lp: &LinearProgram, name: &str, out: &mut impl Write) -> io::Result<()> {
    let n = lp.num_vars();
    writeln!(out, "NAME          {name}")?;
    if lp.sense() == Sense::Maximize {
        writeln!(out, "OBJSENSE")?;
        writeln!(out, "    MAX")?;
    }
    writeln!(out, "ROWS")?;
    writeln!(out, " N  COST")?;
    for (i, c) in lp.constraints().iter().enumerate() {
        let tag = match c.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        writeln!(out, " {tag}  R{}", i + 1)?;
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, c) in lp.constraints().iter().enumerate() {
        for &(j, a) in &c.coeffs {
            columns[j].push((i, a));
        }
    }
    writeln!(out, "COLUMNS")?;
    for (j, col) in columns.iter_mut().enumerate() {
        let cname = format!("C{}", j + 1);
        let cost = lp.objective()[j];
        if cost != 0.0 || col.is_empty() {
            entry(out, &cname, "COST", cost)?;
        }
        col.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < col.len() {
            let row = col[k].0;
            let mut a = 0.0;
            while k < col.len() && col[k].0 == row {
                a += col[k].1;
                k += 1;
            }
            if a != 0.0 {
                entry(out, &cname, &format!("R{}", row + 1), a)?;
            }
        }
    }

    writeln!(out, "RHS")?;
    for (i, c) in lp.constraints().iter().enumerate() {
        if c.rhs != 0.0 {
            entry(out, "RHS", &format!("R{}", i + 1), c.rhs)?;
        }
    }

    writeln!(out, "BOUNDS")?;
    for j in 0..n {
        let cname = format!("C{}", j + 1);
        let lo = lp.lower()[j];
        let up = lp.upper()[j];
        match (lo == f64::NEG_INFINITY, up) {
            (true, None) => writeln!(out, " FR BND       {cname}")?,
            (true, Some(u)) => {
                writeln!(out, " MI BND       {cname}")?;
                writeln!(out, " UP BND       {cname:<8}  {}", number(u))?;
            }
            (false, up) => {
                if lo != 0.0 {
                    writeln!(out, " LO BND       {cname:<8}  {}", number(lo))?;
                }
                if let Some(u) = up {
                    writeln!(out, " UP BND       {cname:<8}  {}", number(u))?;
                }
            }
        }
    }
    writeln!(out, "ENDATA")
}

#[cfg(test)]
mod tests {
    use super::*;
    use riskbound_core::lp::solve_lp;
    use std::collections::HashMap;

    /// Reads back what [`write_mps`] emits (one entry per line).
    fn read_mps(text: &str) -> LinearProgram {
        let mut section = "";
        let mut sense = Sense::Minimize;
        let mut rows: Vec<(String, Relation)> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        let mut cost: HashMap<String, f64> = HashMap::new();
        let mut coef: Vec<(String, String, f64)> = Vec::new();
        let mut rhs: HashMap<String, f64> = HashMap::new();
        let mut bounds: HashMap<String, (f64, Option<f64>)> = HashMap::new();
        for line in text.lines() {
            if !line.starts_with(' ') {
                section = line.split_whitespace().next().unwrap();
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match section {
                "OBJSENSE" => sense = Sense::Maximize,
                "ROWS" if f[0] != "N" => rows.push((
                    f[1].to_string(),
                    match f[0] {
                        "L" => Relation::Le,
                        "G" => Relation::Ge,
                        _ => Relation::Eq,
                    },
                )),
                "COLUMNS" => {
                    if !cols.contains(&f[0].to_string()) {
                        cols.push(f[0].to_string());
                    }
                    if f[1] == "COST" {
                        cost.insert(f[0].to_string(), f[2].parse().unwrap());
                    } else {
                        coef.push((f[0].to_string(), f[1].to_string(), f[2].parse().unwrap()));
                    }
                }
                "RHS" => {
                    rhs.insert(f[1].to_string(), f[2].parse().unwrap());
                }
                "BOUNDS" => {
                    let b = bounds.entry(f[2].to_string()).or_insert((0.0, None));
                    match f[0] {
                        "FR" | "MI" => b.0 = f64::NEG_INFINITY,
                        "LO" => b.0 = f[3].parse().unwrap(),
                        "UP" => b.1 = Some(f[3].parse().unwrap()),
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        let mut lp = LinearProgram::new(sense);
        for c in &cols {
            let (lo, up) = bounds.get(c).copied().unwrap_or((0.0, None));
            lp.add_var(cost.get(c).copied().unwrap_or(0.0), lo, up);
        }
        for (name, rel) in &rows {
            let coeffs = coef
                .iter()
                .filter(|e| &e.1 == name)
                .map(|e| (cols.iter().position(|c| c == &e.0).unwrap(), e.2))
                .collect();
            lp.add_constraint(coeffs, *rel, rhs.get(name).copied().unwrap_or(0.0));
        }
        lp
    }

    #[test]
    fn numbers_fit_the_field() {
        for v in [0.1 + 0.2, -1.0 / 3.0, 1e-17, 123456789012345.0, -2.5e300] {
            let s = number(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-6 * v.abs(), "{s}");
        }
    }

    #[test]
    fn dump_reads_back_to_the_same_optimum() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(3.0, 0.0, Some(4.0));
        let y = lp.add_free_var(2.0);
        let z = lp.add_var(-1.0, 1.0, None);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0), (z, 1.0)], Relation::Le, 10.0);
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Ge, -2.0);
        lp.add_constraint(vec![(y, 1.0), (z, -2.0)], Relation::Eq, 0.5);
        let mut buf = Vec::new();
        write_mps(&lp, "TEST", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("OBJSENSE\n    MAX\n"));
        let back = read_mps(&text);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&back).unwrap();
        assert!(a.is_optimal() && b.is_optimal());
        assert!((a.objective - b.objective).abs() < 1e-9);
    }
}

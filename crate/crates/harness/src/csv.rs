//! Sweep rows and their CSV rendering.
//!
//! Floats are printed with nine significant digits in scientific notation,
//! and rows are sorted by (sweep variable, mode label), so the same
//! experiment always produces the same bytes no matter how its points were
//! scheduled. The seconds column is part of the schema but is pinned to
//! zero in the file for the same reason; real timings go to the log
//! instead.

pub const HEADER: &str = "sweep_var,mode,ee_bits_per_joule,se_bits_per_use,outer_iters,seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_var: f64,
    pub mode: String,
    pub ee: f64,
    pub se: f64,
    pub outer_iters: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.sweep_var
                .partial_cmp(&b.sweep_var)
                .expect("finite sweep variables")
                .then_with(|| a.mode.cmp(&b.mode))
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.8e},{},{:.8e},{:.8e},{},{:.8e}\n",
                r.sweep_var, r.mode, r.ee, r.se, r.outer_iters, r.seconds
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64, mode: &str) -> SweepRow {
        SweepRow {
            sweep_var: v,
            mode: mode.into(),
            ee: 1234.56789,
            se: 9.87654321,
            outer_iters: 3,
            seconds: 0.0,
        }
    }

    #[test]
    fn rows_sort_by_value_then_mode() {
        let mut result = SweepResult {
            rows: vec![row(10.0, "b"), row(4.0, "z"), row(10.0, "a")],
        };
        result.sort();
        let order: Vec<(f64, &str)> = result
            .rows
            .iter()
            .map(|r| (r.sweep_var, r.mode.as_str()))
            .collect();
        assert_eq!(order, vec![(4.0, "z"), (10.0, "a"), (10.0, "b")]);
    }

    #[test]
    fn csv_has_nine_significant_digits() {
        let result = SweepResult {
            rows: vec![row(4.0, "dynamic-ee-tunable")],
        };
        let text = result.to_csv();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(HEADER));
        assert_eq!(
            lines.next(),
            Some("4.00000000e0,dynamic-ee-tunable,1.23456789e3,9.87654321e0,3,0.00000000e0")
        );
    }
}

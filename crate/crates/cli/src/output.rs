//! CSV emission. Numbers carry 17 significant digits so every `f64`
//! survives a text round trip; missing values are empty cells.

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// In-memory CSV with a fixed header and LF line endings.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.writer.write_record(&cells).expect("writing to memory");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("flushing to memory");
        String::from_utf8(bytes).expect("cells are UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17, 0.0, f64::MIN_POSITIVE] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_num(0.5f64.sqrt()), "7.0710678118654757e-1");
    }

    #[test]
    fn table_uses_lf() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.row(vec!["1".into(), String::new()]);
        assert_eq!(t.finish(), "a,b\n1,\n");
    }
}

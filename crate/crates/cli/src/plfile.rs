//! Protection-level files: `x,p` breakpoint rows under `#` header comments
//! carrying `key=value` pairs, or the JSON form written by `--format json`.

use std::collections::BTreeMap;

use pareto_pl::PlFunction;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlFile {
    pub m: f64,
    pub r_low: f64,
    pub r_high: f64,
    pub flat_from: Option<f64>,
    /// Extra header values such as `c` and `r_star`.
    #[serde(default)]
    pub meta: BTreeMap<String, f64>,
    pub breakpoints: Vec<(f64, f64)>,
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl PlFile {
    pub fn to_csv(&self) -> Result<String, String> {
        let mut head = format!("# m={} r_low={} r_high={}", fmt_num(self.m), fmt_num(self.r_low), fmt_num(self.r_high));
        if let Some(f) = self.flat_from {
            head.push_str(&format!(" flat_from={}", fmt_num(f)));
        }
        head.push('\n');
        if !self.meta.is_empty() {
            let kv: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect();
            head.push_str(&format!("# {}\n", kv.join(" ")));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "p"]).map_err(|e| e.to_string())?;
        for (x, p) in &self.breakpoints {
            w.write_record([fmt_num(*x), fmt_num(*p)]).map_err(|e| e.to_string())?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        Ok(head + &body)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(|e| format!("bad PL json: {e}"));
        }
        let mut kv = BTreeMap::new();
        for line in text.lines().filter_map(|l| l.trim().strip_prefix('#')) {
            for pair in line.split_whitespace() {
                let (k, v) = pair.split_once('=').ok_or_else(|| format!("bad header entry `{pair}`"))?;
                let v: f64 = v.parse().map_err(|_| format!("bad number in header entry `{pair}`"))?;
                kv.insert(k.to_string(), v);
            }
        }
        let mut take = |k: &str| kv.remove(k);
        let (m, r_low, r_high) = match (take("m"), take("r_low"), take("r_high")) {
            (Some(m), Some(l), Some(h)) => (m, l, h),
            _ => return Err("PL header must carry m, r_low and r_high".into()),
        };
        let flat_from = take("flat_from");

        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut breakpoints = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            breakpoints.push(rec.map_err(|e| format!("bad PL row: {e}"))?);
        }
        Ok(PlFile { m, r_low, r_high, flat_from, meta: kv, breakpoints })
    }

    pub fn function(&self) -> Result<PlFunction, String> {
        PlFunction::new(self.breakpoints.clone()).map_err(|e| e.to_string())
    }
}

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::BatchQuality;

pub const REPORT_HEADER: &str = "You are generating tabular data. Here is the quality evaluation report:";

const MEAN_PREFIX: &str = "Adjust mean values closer to: ";
const STD_PREFIX: &str = "Maintain variance similar to: ";
const CORR_PREFIX: &str = "Strengthen correlation between ";
const DIST_PREFIX: &str = "Align distribution patterns for: ";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "items", rename_all = "snake_case")]
pub enum Directive {
    /// Target means in original units.
    AdjustMeans(Vec<(String, f64)>),
    /// Target population stds in original units.
    MaintainVariance(Vec<(String, f64)>),
    StrengthenCorrelation(Vec<(String, String)>),
    AlignDistribution(Vec<String>),
}

impl Directive {
    pub fn render(&self) -> String {
        let targets = |list: &[(String, f64)]| {
            list.iter()
                .map(|(n, v)| format!("{n}={v}"))
                .collect::<Vec<_>>()
                .join("; ")
        };
        match self {
            Directive::AdjustMeans(t) => format!("{MEAN_PREFIX}{}", targets(t)),
            Directive::MaintainVariance(t) => format!("{STD_PREFIX}{}", targets(t)),
            Directive::StrengthenCorrelation(pairs) => format!(
                "{CORR_PREFIX}{}",
                pairs
                    .iter()
                    .map(|(a, b)| format!("({a}, {b})"))
                    .collect::<Vec<_>>()
                    .join("; ")
            ),
            Directive::AlignDistribution(names) => format!("{DIST_PREFIX}{}", names.join("; ")),
        }
    }

    fn parse(line: &str) -> Option<Directive> {
        let targets = |rest: &str| -> Option<Vec<(String, f64)>> {
            rest.split("; ")
                .map(|item| {
                    let (n, v) = item.rsplit_once('=')?;
                    Some((n.trim().to_string(), v.trim().parse().ok()?))
                })
                .collect()
        };
        if let Some(rest) = line.strip_prefix(MEAN_PREFIX) {
            return targets(rest).map(Directive::AdjustMeans);
        }
        if let Some(rest) = line.strip_prefix(STD_PREFIX) {
            return targets(rest).map(Directive::MaintainVariance);
        }
        if let Some(rest) = line.strip_prefix(CORR_PREFIX) {
            return rest
                .split("; ")
                .map(|item| {
                    let inner = item.trim().strip_prefix('(')?.strip_suffix(')')?;
                    let (a, b) = inner.split_once(", ")?;
                    Some((a.to_string(), b.to_string()))
                })
                .collect::<Option<Vec<_>>>()
                .map(Directive::StrengthenCorrelation);
        }
        if let Some(rest) = line.strip_prefix(DIST_PREFIX) {
            return Some(Directive::AlignDistribution(rest.split("; ").map(str::to_string).collect()));
        }
        None
    }
}

/// Quality summary of one batch plus the directives it triggered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub quality: BatchQuality,
    pub directives: Vec<Directive>,
}

impl FeedbackReport {
    /// True when no check fired; such a report is not sent.
    pub fn is_empty(&self) -> bool {
        self.directives.is_empty()
    }

    /// The text block appended to the next generation prompt.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_HEADER);
        out.push_str("\n1. Mean and Standard Deviation Differences:\n");
        for a in &self.quality.attributes {
            let _ = writeln!(
                out,
                "  - {}: Mean diff = {:.2}, Std dev diff = {:.2}",
                a.attribute, a.mean_diff, a.std_diff
            );
        }
        out.push_str("2. Correlation Differences:\n");
        match &self.quality.correlation {
            Some(c) => match c.pairs.first() {
                Some(p) => {
                    let _ = writeln!(out, "  - Max diff = {:.2} between ({}, {})", c.max_diff, p.a, p.b);
                }
                None => out.push_str("  - Max diff = 0.00\n"),
            },
            None => out.push_str("  - unavailable (fewer than 2 rows or numeric attributes)\n"),
        }
        out.push_str("3. Distribution Differences (KS statistic):\n");
        for a in &self.quality.attributes {
            let _ = writeln!(out, "  - {}: {:.2}", a.attribute, a.ks);
        }
        out.push_str("Apply these corrections in the next samples:");
        for d in &self.directives {
            out.push_str("\n- ");
            out.push_str(&d.render());
        }
        out
    }
}

/// Recovers directives from any text containing a rendered report (for
/// example a whole generation prompt). Unrecognised lines are ignored.
pub fn parse_directives(text: &str) -> Vec<Directive> {
    let Some(start) = text.find(REPORT_HEADER) else {
        return Vec::new();
    };
    text[start..]
        .lines()
        .filter_map(|l| l.trim().strip_prefix("- "))
        .filter_map(Directive::parse)
        .collect()
}

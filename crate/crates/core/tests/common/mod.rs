#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use relsynth::prompt::ClassCodeMap;
use relsynth::tabular::{AttributeSpec, Schema};

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

type Coded<'a> = (&'a str, &'a str, &'a [(&'a str, &'a str)]);

/// Builds a schema whose categorical values are each paired with a code.
/// An empty code list marks a numeric attribute.
fn coded_schema(columns: &[Coded], label: &str) -> (Schema, ClassCodeMap) {
    let mut attrs = Vec::new();
    let mut table = BTreeMap::new();
    for (name, desc, values) in columns {
        if values.is_empty() {
            attrs.push(AttributeSpec::numeric(*name, *desc));
        } else {
            attrs.push(AttributeSpec::categorical(*name, *desc, values.iter().map(|(v, _)| *v)));
            table.insert(
                name.to_string(),
                values.iter().map(|(v, c)| (v.to_string(), c.to_string())).collect::<BTreeMap<_, _>>(),
            );
        }
    }
    let schema = Schema::new(attrs, label).unwrap();
    let codes = ClassCodeMap::with_codes(&schema, &table).unwrap();
    (schema, codes)
}

pub fn travel() -> (Schema, ClassCodeMap) {
    coded_schema(
        &[
            ("Churn", "Whether the customer churned", &[("0", "IHU"), ("1", "HRL")]),
            ("Age", "Customer age in years", &[]),
            ("FrequentFlyer", "Frequent flyer status", &[("No", "YBW"), ("Yes", "YMP"), ("No Record", "K2Q")]),
            (
                "AnnualIncomeClass",
                "Income band",
                &[("Low Income", "T6L"), ("Middle Income", "CL2"), ("High Income", "OI8")],
            ),
            ("ServicesOpted", "Number of services used", &[]),
            ("AccountSyncedToSocialMedia", "Social media account linked", &[("No", "NXU"), ("Yes", "R4M")]),
            ("BookedHotelOrNot", "Whether a hotel was booked", &[("No", "EUA"), ("Yes", "U0X")]),
        ],
        "Churn",
    )
}

pub fn thyroid() -> (Schema, ClassCodeMap) {
    coded_schema(
        &[
            ("Recurred", "Whether the cancer recurred", &[("No", "A8O"), ("Yes", "N5Q")]),
            ("Age", "Age at diagnosis", &[]),
            ("Gender", "Patient gender", &[("F", "A6I"), ("M", "LPT")]),
            ("Smoking", "Current smoker", &[("No", "GQP"), ("Yes", "W6O")]),
            ("Hx Smoking", "Smoking history", &[("No", "Z2Y"), ("Yes", "H1S")]),
            ("Hx Radiotherapy", "Radiotherapy history", &[("No", "BFG"), ("Yes", "R9T")]),
            (
                "Thyroid Function",
                "Thyroid function status",
                &[("Euthyroid", "BMN"), ("Clinical Hyperthyroidism", "HLJ"), ("Subclinical Hypothyroidism", "S3H")],
            ),
            (
                "Physical Examination",
                "Examination finding",
                &[("Single nodular goiter-left", "KMR"), ("Multinodular goiter", "MQ8"), ("Normal", "N0R")],
            ),
            ("Adenopathy", "Lymph node enlargement", &[("No", "P1R"), ("Right", "RG7")]),
            ("Pathology", "Tumour pathology", &[("Papillary", "VDC"), ("Follicular", "F0L")]),
            ("Focality", "Tumour focality", &[("Uni-Focal", "IOU"), ("Multi-Focal", "UE4")]),
            ("Risk", "Risk category", &[("Low", "EOT"), ("Intermediate", "HGR"), ("High", "H9G")]),
            ("T", "Tumour stage", &[("T2", "B8U"), ("T3a", "T3A")]),
            ("N", "Node stage", &[("N0", "OLC"), ("N1b", "T47"), ("N1a", "N1A")]),
            ("M", "Metastasis stage", &[("M0", "QA8"), ("M1", "M1X")]),
            ("Stage", "Overall stage", &[("I", "WY1"), ("II", "W2Y")]),
            (
                "Response",
                "Treatment response",
                &[
                    ("Excellent", "I8L"),
                    ("Structural Incomplete", "GC4"),
                    ("Indeterminate", "LSU"),
                    ("Biochemical Incomplete", "B1C"),
                ],
            ),
        ],
        "Recurred",
    )
}

//! Generators for the four correlation-bearing synthetic benchmarks.
//!
//! Each generator draws a handful of base attributes, derives the rest
//! through fixed rules (the engineered correlations), and assigns classes by
//! cutting a noisy latent risk/propensity score at fixed proportions. The
//! proportions reproduce the reference class counts for n = 1000 exactly and
//! scale with n.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AttributeSpec, Dataset, Schema, TabularError, Value};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    ConsumerBehavior,
    HealthMetrics,
    RealEstate,
    SocialNetwork,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [
        Benchmark::ConsumerBehavior,
        Benchmark::HealthMetrics,
        Benchmark::RealEstate,
        Benchmark::SocialNetwork,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::ConsumerBehavior => "consumer_behavior",
            Benchmark::HealthMetrics => "health_metrics",
            Benchmark::RealEstate => "real_estate",
            Benchmark::SocialNetwork => "social_network",
        }
    }

    /// Domain phrase used in the metadata prompt.
    pub fn domain(self) -> &'static str {
        match self {
            Benchmark::ConsumerBehavior => "customer purchasing behaviour",
            Benchmark::HealthMetrics => "patient health screening",
            Benchmark::RealEstate => "residential property listings",
            Benchmark::SocialNetwork => "social media user activity",
        }
    }
}

impl FromStr for Benchmark {
    type Err = TabularError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| TabularError::UnknownBenchmark(s.to_string()))
    }
}

pub fn benchmark_schema(which: Benchmark) -> Schema {
    use AttributeSpec as A;
    let (attrs, label) = match which {
        Benchmark::RealEstate => (
            vec![
                A::numeric("area", "Apartment floor area in square metres"),
                A::categorical("location", "Neighbourhood type; sets the base price per square metre", ["downtown", "suburb", "rural"]),
                A::numeric("age", "Building age in years"),
                A::numeric("renovation_level", "Renovation grade from 1 (basic) to 5 (luxury); multiplies the price"),
                A::numeric("price", "Listing price: base price per square metre times area times renovation level, minus an age discount"),
                A::categorical("house_type", "Dwelling type; detached houses are larger", ["apartment", "townhouse", "detached"]),
                A::numeric("traffic_convenience", "Transport access score from 1 to 10"),
                A::categorical("school_district", "Whether the property lies in a sought-after school district", ["no", "yes"]),
            ],
            "school_district",
        ),
        Benchmark::ConsumerBehavior => (
            vec![
                A::numeric("age", "Customer age in years"),
                A::categorical("gender", "Customer gender", ["male", "female"]),
                A::numeric("income", "Annual income; grows with age and education"),
                A::numeric("spending_score", "Spending propensity score from 1 to 100"),
                A::categorical("education_level", "Highest completed education", ["high_school", "bachelor", "master", "phd"]),
                A::categorical("marital_status", "Marital status", ["single", "married", "divorced"]),
                A::numeric("children", "Number of children in the household"),
                A::categorical("location", "Residential area type", ["urban", "suburban", "rural"]),
                A::categorical("product_category", "Category of the main purchase", ["Home", "Food"]),
            ],
            "product_category",
        ),
        Benchmark::HealthMetrics => (
            vec![
                A::numeric("age", "Patient age in years"),
                A::categorical("gender", "Patient gender", ["male", "female"]),
                A::numeric("height", "Height in centimetres"),
                A::numeric("weight", "Weight in kilograms"),
                A::numeric("bmi", "Body mass index: weight divided by squared height in metres"),
                A::numeric("heart_rate", "Resting heart rate in beats per minute"),
                A::numeric("blood_pressure", "Systolic blood pressure in mmHg; rises with age and BMI"),
                A::numeric("cholesterol", "Total cholesterol in mg/dL; rises with age and BMI"),
                A::categorical("risk_level", "Cardiovascular risk category", ["low risk", "medium risk", "high risk"]),
            ],
            "risk_level",
        ),
        Benchmark::SocialNetwork => (
            vec![
                A::numeric("age", "User age in years"),
                A::categorical("country", "User country", ["US", "UK", "IN", "BR", "DE"]),
                A::numeric("daily_posts", "Average posts per day"),
                A::numeric("following_count", "Number of accounts the user follows"),
                A::numeric("followers_count", "Number of followers; grows with posting activity and account age"),
                A::numeric("avg_likes", "Average likes per post; proportional to followers"),
                A::numeric("avg_likes_from_following", "Average likes per post coming from followed accounts"),
                A::numeric("account_age_exponent", "Base-10 logarithm of account age in days"),
                A::categorical("influence_level", "Influence tier from 0 (none) to 3 (high)", ["0", "1", "2", "3"]),
            ],
            "influence_level",
        ),
    };
    Schema::new(attrs, label).expect("built-in benchmark schema is valid")
}

/// Seeded draw of `n` rows from one of the benchmark generators.
pub fn generate_benchmark(which: Benchmark, n: usize, seed: u64) -> Result<Dataset, TabularError> {
    if n == 0 {
        return Err(TabularError::TooSmall("benchmark size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = benchmark_schema(which);
    let rows = match which {
        Benchmark::RealEstate => real_estate(&mut rng, n),
        Benchmark::ConsumerBehavior => consumer_behavior(&mut rng, n),
        Benchmark::HealthMetrics => health_metrics(&mut rng, n),
        Benchmark::SocialNetwork => social_network(&mut rng, n),
    };
    Dataset::new(schema, rows)
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").sample(rng)
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

fn zscores(xs: &[f64]) -> Vec<f64> {
    let m = stats::mean(xs);
    let s = stats::population_std(xs);
    xs.iter().map(|x| if s > 0.0 { (x - m) / s } else { 0.0 }).collect()
}

/// Assigns classes by ascending latent score: the lowest `props[0]` share
/// gets `order[0]`, and so on. Ties break by row position.
fn assign_by_quantile(latent: &[f64], order: &[usize], props: &[f64]) -> Vec<usize> {
    let n = latent.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| latent[a].total_cmp(&latent[b]).then(a.cmp(&b)));
    let mut out = vec![0; n];
    let mut cum = 0.0;
    let mut start = 0;
    for (k, (&class, &p)) in order.iter().zip(props).enumerate() {
        cum += p;
        let end = if k + 1 == order.len() {
            n
        } else {
            ((n as f64 * cum).round() as usize).min(n)
        };
        for &i in &idx[start..end.max(start)] {
            out[i] = class;
        }
        start = end.max(start);
    }
    out
}

fn cat(s: &str) -> Value {
    Value::Cat(s.to_string())
}

fn real_estate(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Value>> {
    const LOCATIONS: [&str; 3] = ["downtown", "suburb", "rural"];
    const BASE_PER_SQM: [f64; 3] = [3000.0, 2000.0, 1200.0];
    const TYPES: [&str; 3] = ["apartment", "townhouse", "detached"];
    // Annual depreciation as a share of the base value.
    const AGE_DISCOUNT: f64 = 0.005;

    struct Draw {
        area: f64,
        loc: usize,
        age: f64,
        level: f64,
        price: f64,
        kind: usize,
        traffic: f64,
    }
    let draws: Vec<Draw> = (0..n)
        .map(|_| {
            let kind = pick(rng, &[0.55, 0.25, 0.20]);
            let area = match kind {
                0 => normal(rng, 70.0, 20.0).clamp(25.0, 200.0),
                1 => normal(rng, 110.0, 25.0).clamp(50.0, 250.0),
                _ => normal(rng, 160.0, 35.0).clamp(80.0, 350.0),
            };
            let area = round_to(area, 1);
            let loc = pick(rng, &[0.30, 0.45, 0.25]);
            let age = rng.random_range(0..=50) as f64;
            let level = rng.random_range(1..=5) as f64;
            let base = BASE_PER_SQM[loc] * area;
            let price = (base * level - AGE_DISCOUNT * age * base).round();
            let traffic = match loc {
                0 => normal(rng, 8.0, 1.0),
                1 => normal(rng, 5.5, 1.5),
                _ => normal(rng, 3.0, 1.2),
            };
            let traffic = round_to(traffic.clamp(1.0, 10.0), 1);
            Draw {
                area,
                loc,
                age,
                level,
                price,
                kind,
                traffic,
            }
        })
        .collect();

    let zp = zscores(&draws.iter().map(|d| d.price.ln()).collect::<Vec<_>>());
    let zt = zscores(&draws.iter().map(|d| d.traffic).collect::<Vec<_>>());
    let latent: Vec<f64> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let loc_bonus = [1.0, 0.5, 0.0][d.loc];
            loc_bonus + 0.8 * zp[i] + 0.3 * zt[i] + normal(rng, 0.0, 0.7)
        })
        .collect();
    let classes = assign_by_quantile(&latent, &[0, 1], &[0.788, 0.212]);

    draws
        .iter()
        .zip(classes)
        .map(|(d, c)| {
            vec![
                Value::Num(d.area),
                cat(LOCATIONS[d.loc]),
                Value::Num(d.age),
                Value::Num(d.level),
                Value::Num(d.price),
                cat(TYPES[d.kind]),
                Value::Num(d.traffic),
                cat(["no", "yes"][c]),
            ]
        })
        .collect()
}

fn consumer_behavior(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Value>> {
    const EDU: [&str; 4] = ["high_school", "bachelor", "master", "phd"];
    const MARITAL: [&str; 3] = ["single", "married", "divorced"];
    const LOC: [&str; 3] = ["urban", "suburban", "rural"];

    struct Draw {
        age: f64,
        gender: usize,
        income: f64,
        spending: f64,
        edu: usize,
        marital: usize,
        children: f64,
        loc: usize,
    }
    let draws: Vec<Draw> = (0..n)
        .map(|_| {
            let age = rng.random_range(18..=70) as f64;
            let gender = pick(rng, &[0.5, 0.5]);
            let edu = pick(rng, &[0.35, 0.40, 0.18, 0.07]);
            let income = (25_000.0 + 600.0 * (age - 18.0) + 12_000.0 * edu as f64 + normal(rng, 0.0, 8_000.0)).max(12_000.0);
            let income = round_to(income, -2);
            let marital = if age < 28.0 {
                pick(rng, &[0.70, 0.25, 0.05])
            } else if age < 45.0 {
                pick(rng, &[0.30, 0.60, 0.10])
            } else {
                pick(rng, &[0.20, 0.60, 0.20])
            };
            let children = match marital {
                1 => pick(rng, &[0.20, 0.30, 0.30, 0.15, 0.05]),
                2 => pick(rng, &[0.30, 0.35, 0.25, 0.10]),
                _ => pick(rng, &[0.80, 0.15, 0.05]),
            } as f64;
            let loc = pick(rng, &[0.45, 0.35, 0.20]);
            let spending = (50.0 + 0.0006 * (income - 50_000.0) - 0.4 * (age - 40.0) + normal(rng, 0.0, 12.0))
                .clamp(1.0, 100.0)
                .round();
            Draw {
                age,
                gender,
                income,
                spending,
                edu,
                marital,
                children,
                loc,
            }
        })
        .collect();

    let zi = zscores(&draws.iter().map(|d| d.income).collect::<Vec<_>>());
    let latent: Vec<f64> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let married = if d.marital == 1 { 0.8 } else { 0.0 };
            let outside_city = if d.loc == 0 { 0.0 } else { 0.3 };
            married + 0.5 * d.children + 0.6 * zi[i] + outside_city + normal(rng, 0.0, 1.0)
        })
        .collect();
    // Ascending propensity: Food first, then Home.
    let classes = assign_by_quantile(&latent, &[1, 0], &[0.482, 0.518]);

    draws
        .iter()
        .zip(classes)
        .map(|(d, c)| {
            vec![
                Value::Num(d.age),
                cat(["male", "female"][d.gender]),
                Value::Num(d.income),
                Value::Num(d.spending),
                cat(EDU[d.edu]),
                cat(MARITAL[d.marital]),
                Value::Num(d.children),
                cat(LOC[d.loc]),
                cat(["Home", "Food"][c]),
            ]
        })
        .collect()
}

fn health_metrics(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Value>> {
    struct Draw {
        age: f64,
        gender: usize,
        height: f64,
        weight: f64,
        bmi: f64,
        hr: f64,
        bp: f64,
        chol: f64,
    }
    let draws: Vec<Draw> = (0..n)
        .map(|_| {
            let age = rng.random_range(20..=80) as f64;
            let gender = pick(rng, &[0.5, 0.5]);
            let height = if gender == 0 {
                normal(rng, 176.0, 7.0)
            } else {
                normal(rng, 163.0, 6.5)
            };
            let height = round_to(height, 1);
            let target_bmi = normal(rng, 25.0 + 0.04 * (age - 50.0), 4.0).clamp(16.0, 45.0);
            let h = height / 100.0;
            let weight = round_to(target_bmi * h * h + normal(rng, 0.0, 2.0), 1);
            let bmi = round_to(weight / (h * h), 2);
            let hr = (normal(rng, 72.0, 8.0) + 0.2 * (bmi - 25.0)).round();
            let bp = (105.0 + 0.5 * (age - 20.0) + 1.2 * (bmi - 25.0) + normal(rng, 0.0, 8.0)).round();
            let chol = (160.0 + 0.8 * (age - 20.0) + 2.0 * (bmi - 25.0) + normal(rng, 0.0, 20.0)).round();
            Draw {
                age,
                gender,
                height,
                weight,
                bmi,
                hr,
                bp,
                chol,
            }
        })
        .collect();

    let col = |f: fn(&Draw) -> f64| zscores(&draws.iter().map(f).collect::<Vec<_>>());
    let (zbp, zch, zage, zbmi) = (col(|d| d.bp), col(|d| d.chol), col(|d| d.age), col(|d| d.bmi));
    let latent: Vec<f64> = (0..n)
        .map(|i| zbp[i] + zch[i] + 0.5 * zage[i] + 0.5 * zbmi[i] + normal(rng, 0.0, 0.8))
        .collect();
    let classes = assign_by_quantile(&latent, &[0, 1, 2], &[0.5, 0.3, 0.2]);

    draws
        .iter()
        .zip(classes)
        .map(|(d, c)| {
            vec![
                Value::Num(d.age),
                cat(["male", "female"][d.gender]),
                Value::Num(d.height),
                Value::Num(d.weight),
                Value::Num(d.bmi),
                Value::Num(d.hr),
                Value::Num(d.bp),
                Value::Num(d.chol),
                cat(["low risk", "medium risk", "high risk"][c]),
            ]
        })
        .collect()
}

fn social_network(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Value>> {
    const COUNTRIES: [&str; 5] = ["US", "UK", "IN", "BR", "DE"];

    struct Draw {
        age: f64,
        country: usize,
        posts: f64,
        following: f64,
        followers: f64,
        likes: f64,
        likes_following: f64,
        acct: f64,
    }
    let draws: Vec<Draw> = (0..n)
        .map(|_| {
            let age = rng.random_range(16..=65) as f64;
            let country = pick(rng, &[0.30, 0.15, 0.25, 0.15, 0.15]);
            let acct = round_to(rng.random_range(0.0..3.0), 2);
            let posts = round_to(normal(rng, 0.5 + 0.2 * acct, 0.8).exp(), 1);
            let following = normal(rng, 5.0, 1.0).exp().round();
            let followers = (2.0 + 0.6 * (following + 1.0).ln() + 0.5 * (posts + 1.0).ln() + 0.8 * acct + normal(rng, 0.0, 1.0))
                .exp()
                .round();
            let likes = round_to(0.03 * followers * normal(rng, 0.0, 0.4).exp(), 1);
            let share = 0.1 + 0.4 * following / (following + followers + 1.0);
            let likes_following = round_to(likes * share, 1);
            Draw {
                age,
                country,
                posts,
                following,
                followers,
                likes,
                likes_following,
                acct,
            }
        })
        .collect();

    let latent: Vec<f64> = draws
        .iter()
        .map(|d| (d.followers + 1.0).ln() + 0.5 * (d.likes + 1.0).ln() + normal(rng, 0.0, 0.5))
        .collect();
    let classes = assign_by_quantile(&latent, &[0, 1, 2, 3], &[0.789, 0.086, 0.055, 0.070]);

    draws
        .iter()
        .zip(classes)
        .map(|(d, c)| {
            vec![
                Value::Num(d.age),
                cat(COUNTRIES[d.country]),
                Value::Num(d.posts),
                Value::Num(d.following),
                Value::Num(d.followers),
                Value::Num(d.likes),
                Value::Num(d.likes_following),
                Value::Num(d.acct),
                cat(["0", "1", "2", "3"][c]),
            ]
        })
        .collect()
}

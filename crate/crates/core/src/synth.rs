//! Seeded synthetic corpus with known types, keys and values.
//!
//! Each ground-truth type owns a fixed set of keys. Every listing carries a
//! brand and one value for each of its type's keys, plus its type name in
//! the `category` specification with optional surface noise (plural,
//! casing, stray whitespace). Vocabularies are chosen so that distinct
//! concepts never look alike to the rule backend; the unit tests check that.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::EdgeSet;
use crate::normalize::pluralize_last;
use crate::pipeline::Listing;

pub const TYPE_NAMES: [&str; 64] = [
    "Pen Mouse",
    "Desk Lamp",
    "Wall Anchor",
    "Battery Holder",
    "Coffee Grinder",
    "Yoga Mat",
    "Hiking Backpack",
    "Wireless Earbud",
    "Phone Case",
    "Water Bottle",
    "Office Chair",
    "Kitchen Scale",
    "Electric Kettle",
    "Hair Dryer",
    "Smartwatch",
    "Desktop Computer",
    "Tablet Stand",
    "Laptop Sleeve",
    "Gaming Keyboard",
    "Bluetooth Speaker",
    "Air Purifier",
    "Ceiling Fan",
    "Robot Vacuum",
    "Rain Jacket",
    "Running Shoe",
    "Wool Sock",
    "Baseball Cap",
    "Cutting Board",
    "Chef Knife",
    "Frying Pan",
    "Dog Leash",
    "Cat Tree",
    "Bird Feeder",
    "Fish Tank",
    "Garden Hose",
    "Lawn Mower",
    "Power Drill",
    "Tape Measure",
    "Toy Box",
    "Paint Brush",
    "Picture Frame",
    "Throw Pillow",
    "Bed Sheet",
    "Shower Curtain",
    "Bath Towel",
    "Toothbrush",
    "Makeup Mirror",
    "Nail Polish",
    "Jigsaw Puzzle",
    "Board Game",
    "Guitar String",
    "Drum Stick",
    "Microphone Stand",
    "Camera Tripod",
    "Memory Card",
    "USB Hub",
    "Power Bank",
    "Phone Charger",
    "Bike Helmet",
    "Tennis Racket",
    "Golf Ball",
    "Fishing Rod",
    "Camping Tent",
    "Sleeping Bag",
];

pub const BRANDS: [&str; 10] = [
    "Acme", "Globex", "Initech", "Umbrella", "Hooli", "Vandelay", "Stark", "Wayne", "Tyrell", "Cyberdyne",
];

/// (key name, value vocabulary). Vocabularies are disjoint across keys.
pub const KEY_POOL: [(&str, &[&str]); 16] = [
    ("Color", &["Red", "Blue", "Green", "Black", "White", "Silver", "Gold", "Pink"]),
    ("Material", &["Aluminum", "Stainless Steel", "ABS Plastic", "Oak Wood", "Cotton", "Leather", "Silicone"]),
    ("Weight", &["120 g", "250 g", "480 g", "1.2 kg", "2.5 kg", "75 g"]),
    ("Power", &["5 W", "18 W", "36 W", "60 W", "150 W", "1500 W"]),
    ("Voltage", &["3.7 V", "12 V", "110 V", "220 V"]),
    ("Capacity", &["800 mAh", "1500 mAh", "2600 mAh", "5200 mAh", "10400 mAh"]),
    ("Connectivity", &["Bluetooth", "Wi-Fi", "USB-C", "Infrared", "Zigbee"]),
    ("Screen Size", &["5.5 in", "6.1 in", "10.1 in", "13.3 in", "15.6 in"]),
    ("Warranty", &["6 Months", "1 Year", "2 Years", "5 Years"]),
    ("Dimensions", &["10 x 5 x 2 cm", "20 x 15 x 5 cm", "30 x 20 x 10 cm", "45 x 30 x 15 cm"]),
    ("Pattern", &["Striped", "Floral", "Plaid", "Solid", "Polka Dot"]),
    ("Size", &["Small", "Medium", "Large", "X-Large"]),
    ("Storage", &["64 GB", "128 GB", "256 GB", "512 GB", "1 TB"]),
    ("Finish", &["Matte", "Glossy", "Satin", "Brushed", "Polished"]),
    ("Water Resistance", &["IPX4", "IP54", "IP67", "IP68"]),
    ("Compatibility", &["Android", "iOS", "Windows", "macOS", "Universal"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub listings: usize,
    pub types: usize,
    pub seed: u64,
    /// Perturb the surface form of the type name in about three of four listings.
    pub noise: bool,
    pub images: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            listings: 50,
            types: 10,
            seed: 7,
            noise: true,
            images: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub listing_id: String,
    pub product_type: String,
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub listings: Vec<Listing>,
    pub truth: Vec<TruthRecord>,
}

impl Synthetic {
    /// Reference key/value facts per listing id.
    pub fn edge_set(&self) -> EdgeSet {
        self.truth
            .iter()
            .map(|t| (t.listing_id.clone(), t.pairs.iter().cloned().collect()))
            .collect()
    }
}

fn snake(name: &str) -> String {
    name.to_lowercase().replace(' ', "_")
}

fn noisy(name: &str, rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..4) {
        0 => pluralize_last(name),
        1 => {
            if rng.random_bool(0.5) {
                name.to_uppercase()
            } else {
                name.to_lowercase()
            }
        }
        2 => format!("  {}  ", name.replace(' ', "   ")),
        _ => name.to_string(),
    }
}

/// Generate a corpus. The same config always yields the same corpus.
///
/// Panics if `types` exceeds the number of built-in type names.
pub fn generate(cfg: &SynthConfig) -> Synthetic {
    assert!(
        (1..=TYPE_NAMES.len()).contains(&cfg.types),
        "types must be between 1 and {}",
        TYPE_NAMES.len()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // each type gets three to five distinct keys from the pool
    let type_keys: Vec<Vec<usize>> = (0..cfg.types)
        .map(|_| {
            let n = rng.random_range(3..=5);
            let mut picked: Vec<usize> = Vec::with_capacity(n);
            while picked.len() < n {
                let k = rng.random_range(0..KEY_POOL.len());
                if !picked.contains(&k) {
                    picked.push(k);
                }
            }
            picked
        })
        .collect();

    let mut listings = Vec::with_capacity(cfg.listings);
    let mut truth = Vec::with_capacity(cfg.listings);
    for i in 0..cfg.listings {
        let t = rng.random_range(0..cfg.types);
        let type_name = TYPE_NAMES[t];
        let id = format!("L{i:05}");
        let brand = BRANDS[rng.random_range(0..BRANDS.len())];
        let surface = if cfg.noise { noisy(type_name, &mut rng) } else { type_name.to_string() };

        let mut specs = indexmap::IndexMap::new();
        specs.insert("category".to_string(), vec![surface]);
        specs.insert("brand".to_string(), vec![brand.to_string()]);
        let mut pairs = vec![("Brand".to_string(), brand.to_string())];
        let mut title_bits = vec![brand.to_string(), type_name.to_string()];
        for &k in &type_keys[t] {
            let (key, vocab) = KEY_POOL[k];
            let value = vocab[rng.random_range(0..vocab.len())];
            specs.insert(snake(key), vec![value.to_string()]);
            pairs.push((key.to_string(), value.to_string()));
            if title_bits.len() < 4 {
                title_bits.push(value.to_string());
            }
        }
        let description = pairs
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join(". ");
        let image_refs = if cfg.images {
            (0..rng.random_range(1..=3)).map(|j| format!("https://img.example/{id}/{j}.jpg")).collect()
        } else {
            Vec::new()
        };
        listings.push(Listing {
            id: id.clone(),
            title: title_bits.join(" "),
            highlights: None,
            description: Some(description),
            specifications: specs,
            image_refs,
        });
        truth.push(TruthRecord {
            listing_id: id,
            product_type: type_name.to_string(),
            pairs,
        });
    }
    Synthetic { listings, truth }
}

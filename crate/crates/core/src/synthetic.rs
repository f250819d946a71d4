//! Deterministic synthetic course catalog for offline end-to-end runs.
//!
//! Each generated course is built around three distinct goals. Its text
//! mentions terms from the shipped keyword table for exactly those goals and
//! is otherwise padded with neutral English sentences, so the keyword oracle
//! labels it with those three goals. All records pass the default cleaning
//! rules.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::RawCourse;
use crate::labelgen::KeywordOracle;
use crate::labels::selectable_goals;

pub const DEFAULT_FIXTURE_SEED: u64 = 20240611;
pub const DEFAULT_FIXTURE_SIZE: usize = 500;

/// Keywords per goal used by the generator: the first few of each goal's
/// list, so every term recurs across many courses of its goal.
pub const CORE_TERMS: usize = 2;

const DEGREES: &[&str] = &[
    "Information and Communication Technology",
    "Nursing",
    "Civil Engineering",
    "Business Administration",
    "Social Services",
    "Environmental Engineering",
    "Media and Design",
    "Logistics",
];

const FILLER: &[&str] = &[
    "The course is taught through lectures, small group sessions and independent reading.",
    "Students complete a project in teams and present their results at the end of the course.",
    "Assessment is based on weekly assignments and a final written report.",
    "The teacher gives feedback on each assignment so that students can follow their own progress.",
    "Attendance at the first session is required in order to form the project groups.",
    "The course material is available in the learning platform before each session.",
    "Students are expected to read the assigned chapters before they come to class.",
    "The course builds on the basic studies of the first year of the degree programme.",
    "Guest speakers from working life visit the course and share their experience with the group.",
    "There is no final exam, but all assignments must be returned on time.",
    "Each student keeps a learning diary that is discussed with the teacher at the end.",
    "The course can also be taken as part of the minor studies of other degree programmes.",
];

const TOPIC_SENTENCES: &[&str] = &[
    "The course introduces {a} and {b} as they appear in professional practice.",
    "Students study how {a} is linked to {b} in current research.",
    "Special attention is paid to {a}, {b} and the questions they raise.",
    "Case studies on {a} and {b} are analysed in small groups.",
];

const OBJECTIVE_SENTENCES: &[&str] = &[
    "After the course the student can explain the role of {a} and {b} in their own field.",
    "The student is able to plan a small project that deals with {a} or {b}.",
    "The student can evaluate different approaches to {a} and {b} and justify their choices.",
];

fn fill(template: &str, a: &str, b: &str) -> String {
    template.replace("{a}", a).replace("{b}", b)
}

fn title_case(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Generates `n` courses from `seed`. Same arguments, same output.
pub fn synthetic_catalog(n: usize, seed: u64) -> Vec<RawCourse> {
    let oracle = KeywordOracle::shipped(5);
    let goals: Vec<u8> = selectable_goals().collect();
    let terms: Vec<Vec<&str>> = (0..=17u8)
        .map(|g| oracle.terms_for(g).into_iter().take(CORE_TERMS).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    (0..n)
        .map(|i| {
            let chosen: Vec<u8> = goals.choose_multiple(&mut rng, 3).copied().collect();
            let pick = |rng: &mut ChaCha8Rng, g: u8| *terms[g as usize].choose(rng).expect("terms");

            let name = format!(
                "{} and {} Studies {}",
                title_case(pick(&mut rng, chosen[0])),
                title_case(pick(&mut rng, chosen[1])),
                i + 1
            );

            let mut desc: Vec<String> = Vec::new();
            let mut obj: Vec<String> = Vec::new();
            for &g in &chosen {
                let pair = |rng: &mut ChaCha8Rng| {
                    let two: Vec<&str> = terms[g as usize].choose_multiple(rng, 2).copied().collect();
                    (two[0], two[1])
                };
                for t in TOPIC_SENTENCES.choose_multiple(&mut rng, 2) {
                    let (a, b) = pair(&mut rng);
                    desc.push(fill(t, a, b));
                }
                let o = OBJECTIVE_SENTENCES.choose(&mut rng).expect("templates");
                let (a, b) = pair(&mut rng);
                obj.push(fill(o, a, b));
            }
            let target = rng.random_range(600..900);
            let mut fillers: Vec<&str> = FILLER.to_vec();
            while desc.iter().chain(&obj).map(|s| s.chars().count() + 1).sum::<usize>() < target {
                if fillers.is_empty() {
                    break;
                }
                let k = rng.random_range(0..fillers.len());
                let sentence = fillers.swap_remove(k);
                let pos = rng.random_range(0..=desc.len());
                desc.insert(pos, sentence.to_string());
            }

            RawCourse {
                id: format!("SYN-{:04}", i + 1),
                name,
                description: Some(desc.join(" ")),
                objective: Some(obj.join(" ")),
                year: rng.random_range(2021..=2023),
                degree: DEGREES.choose(&mut rng).expect("degrees").to_string(),
                source_language_hint: Some("en".into()),
            }
        })
        .collect()
}

/// The three goals a synthetic course was built around, recovered from its
/// text with the shipped keyword table.
pub fn designed_goals(course: &RawCourse) -> Vec<u8> {
    let oracle = KeywordOracle::shipped(5);
    let text = format!(
        "{} {} {}",
        course.name,
        course.description.as_deref().unwrap_or_default(),
        course.objective.as_deref().unwrap_or_default()
    );
    let mut goals: Vec<u8> = oracle.rank(&text).into_iter().map(|(g, _)| g).collect();
    goals.sort_unstable();
    goals
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Question, option and raw-answer text for simulated samples.

use rand::Rng;

const ADJECTIVES: [&str; 16] = [
    "amber", "braided", "carved", "dyed", "embroidered", "folded", "gilded", "hammered", "indigo", "lacquered",
    "painted", "quilted", "roasted", "smoked", "woven", "glazed",
];

const NOUNS: [&str; 16] = [
    "basket", "bowl", "cloak", "drum", "fan", "flatbread", "headscarf", "kite", "lantern", "mask", "pottery",
    "sandal", "shawl", "stew", "teapot", "tapestry",
];

const QUESTIONS: [&str; 4] = [
    "Which item in the image is most closely tied to {culture} celebrations?",
    "What is the traditional object shown in this {culture} scene?",
    "Which dish or craft pictured here is typical of {culture}?",
    "What would a visitor to {culture} most likely recognise in this image?",
];

pub(crate) fn question<R: Rng>(rng: &mut R, culture: &str) -> String {
    QUESTIONS[rng.random_range(0..QUESTIONS.len())].replace("{culture}", culture)
}

/// Distinct two-word options. Every option has the same word count and no two
/// are equal, so none occurs inside another at a word boundary.
pub(crate) fn options<R: Rng>(rng: &mut R, count: usize) -> Vec<String> {
    let picks = rand::seq::index::sample(rng, ADJECTIVES.len() * NOUNS.len(), count);
    picks
        .into_iter()
        .map(|i| format!("{} {}", ADJECTIVES[i / NOUNS.len()], NOUNS[i % NOUNS.len()]))
        .collect()
}

pub(crate) const TEMPLATES: usize = 5;

/// Free-form rendering of a chosen option. `distractor` is another option that
/// only appears before the final answer.
pub(crate) fn raw_prediction(template: usize, answer: &str, distractor: &str) -> String {
    match template {
        0 => answer.to_string(),
        1 => format!("The answer is {answer}."),
        2 => format!("{distractor} is plausible, but the answer is {answer}."),
        3 => format!("  {}  ", answer.to_uppercase().replace(' ', "   ")),
        _ => format!("Looking at the image, I think it is {answer}"),
    }
}

//! Shared fixtures for integration tests.
#![allow(dead_code)] // not every test target uses every fixture

use std::collections::BTreeMap;

use traitplay::dialogue::{AblationConfig, Dialogue, Termination, Utterance};
use traitplay::persona::{derive_profile, PersonalityDescription, Score};
use traitplay::{Dimension, RoleCard, Topic};

pub fn kelly() -> RoleCard {
    let mut scores = BTreeMap::new();
    scores.insert(Dimension::Agr, Score::new(6.0).unwrap());
    scores.insert(Dimension::Ext, Score::new(5.5).unwrap());
    RoleCard {
        id: "role-0001".into(),
        name: "Kelly".into(),
        gender: "Female".into(),
        age: 35,
        experience: "Kelly is a 35-year-old project manager known for her exceptional attention to detail."
            .into(),
        profile: derive_profile(scores).unwrap(),
    }
}

pub fn harold() -> RoleCard {
    let mut scores = BTreeMap::new();
    scores.insert(Dimension::Con, Score::new(7.0).unwrap());
    RoleCard {
        id: "role-0002".into(),
        name: "Harold".into(),
        gender: "Male".into(),
        age: 35,
        experience: "Harold is a successful entrepreneur who has built a thriving business through his exceptional self-discipline."
            .into(),
        profile: derive_profile(scores).unwrap(),
    }
}

pub fn topic() -> Topic {
    Topic {
        id: "topic-0001".into(),
        text: "Dealing with excessive work demands and stress in a job.".into(),
        source_ref: "row:0".into(),
    }
}

pub fn fixed_description() -> PersonalityDescription {
    PersonalityDescription {
        text: "The personality traits are very high in agreeableness and very high in extraversion, with very sympathetic, very trustful, a bit talkative, a bit energetic"
            .into(),
        used_descriptors: Vec::new(),
    }
}

pub fn fixture_dialogue() -> Dialogue {
    Dialogue {
        id: "dlg-000001".into(),
        initiator_id: "role-0001".into(),
        partner_id: "role-0002".into(),
        topic_id: "topic-0001".into(),
        topic_text: topic().text,
        ablation: AblationConfig::default(),
        termination: Termination::EndMarker,
        utterances: vec![
            Utterance::new(
                "role-0001".into(),
                "Hi Harold! Work has been piling up on me lately. How do you cope when everything feels urgent?".into(),
            ),
            Utterance::new(
                "role-0002".into(),
                "I make a strict plan every morning and stick to it. Structure keeps the stress away.".into(),
            ),
        ],
    }
}

pub fn names() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("role-0001".to_owned(), "Kelly".to_owned()),
        ("role-0002".to_owned(), "Harold".to_owned()),
    ])
}

use std::collections::BTreeMap;

use deme_core::diff::align_chars;
use deme_core::document::{
    is_anchor_whitespace, remap_offsets, render_annotated, Anchor, AnchorPosition, DocumentRevision, DocumentSource,
};
use deme_core::{AnchorId, CommentId, DocumentId, UserId};
use deme_testkit::lcs::{brute_force_alignment, dp_alignment};
use proptest::prelude::*;

fn doc() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop::sample::select(vec!['a', 'b', 'é', ' ', ' ', '\n', '\t']), 0..60)
        .prop_map(|v| v.into_iter().collect())
}

/// Characters that never occur in [`doc`].
fn foreign() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop::sample::select(vec!['0', '1', '2', 'x', 'ß']), 1..12)
        .prop_map(|v| v.into_iter().collect())
}

#[derive(Debug, Clone)]
enum Edit {
    Insert(usize, String),
    Delete(usize, usize),
}

fn edits() -> impl Strategy<Value = Vec<Edit>> {
    let edit = prop_oneof![
        (any::<usize>(), doc()).prop_map(|(p, s)| Edit::Insert(p, s)),
        (any::<usize>(), 0usize..10).prop_map(|(p, n)| Edit::Delete(p, n)),
    ];
    proptest::collection::vec(edit, 0..6)
}

fn apply(text: &str, edits: &[Edit]) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for e in edits {
        match e {
            Edit::Insert(p, s) => {
                let p = p % (chars.len() + 1);
                chars.splice(p..p, s.chars());
            }
            Edit::Delete(p, n) => {
                let p = p % (chars.len() + 1);
                let end = (p + n).min(chars.len());
                chars.drain(p..end);
            }
        }
    }
    chars.into_iter().collect()
}

fn whitespace_offsets(text: &str) -> Vec<usize> {
    text.chars()
        .enumerate()
        .filter(|(_, c)| is_anchor_whitespace(*c))
        .map(|(i, _)| i)
        .collect()
}

fn revision(text: &str) -> DocumentRevision {
    DocumentRevision {
        document_id: DocumentId::from_uuid(uuid_of(1)),
        revision: 1,
        source: DocumentSource::plain(text),
        author: UserId::new(),
        created_at: deme_testkit::t(0),
    }
}

fn uuid_of(n: u128) -> uuid::Uuid {
    uuid::Uuid::from_u128(n)
}

fn anchor_at(document: DocumentId, offset: usize) -> Anchor {
    Anchor {
        id: AnchorId::new(),
        document_id: document,
        comment_id: CommentId::new(),
        created_on_revision: 1,
        positions: BTreeMap::from([(1, AnchorPosition::Live(offset))]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn alignment_matches_full_table(old in doc(), script in edits()) {
        let new = apply(&old, &script);
        let a: Vec<char> = old.chars().collect();
        let b: Vec<char> = new.chars().collect();
        prop_assert_eq!(align_chars(&a, &b), dp_alignment(&a, &b));
    }

    #[test]
    fn remap_lands_on_whitespace_and_follows_the_oracle(old in doc(), script in edits()) {
        let new = apply(&old, &script);
        let offsets = whitespace_offsets(&old);
        let new_chars: Vec<char> = new.chars().collect();
        let oracle = dp_alignment(&old.chars().collect::<Vec<_>>(), &new_chars);
        for (&o, pos) in offsets.iter().zip(remap_offsets(&old, &new, &offsets)) {
            match pos {
                AnchorPosition::Live(j) => {
                    prop_assert!(is_anchor_whitespace(new_chars[j]));
                    prop_assert_eq!(oracle[o], Some(j));
                }
                AnchorPosition::Orphaned => prop_assert_eq!(oracle[o], None),
            }
        }
    }

    #[test]
    fn identity_edit_keeps_offsets(text in doc()) {
        let offsets = whitespace_offsets(&text);
        let remapped = remap_offsets(&text, &text, &offsets);
        let expected: Vec<_> = offsets.iter().map(|&o| AnchorPosition::Live(o)).collect();
        prop_assert_eq!(remapped, expected);
    }

    #[test]
    fn insertion_shifts_by_its_length(base in doc(), block in foreign(), at in any::<usize>()) {
        let chars: Vec<char> = base.chars().collect();
        let p = at % (chars.len() + 1);
        let k = block.chars().count();
        let mut new = chars.clone();
        new.splice(p..p, block.chars());
        let new: String = new.into_iter().collect();
        let offsets = whitespace_offsets(&base);
        for (&o, pos) in offsets.iter().zip(remap_offsets(&base, &new, &offsets)) {
            let expected = if o >= p { o + k } else { o };
            prop_assert_eq!(pos, AnchorPosition::Live(expected));
        }
    }

    #[test]
    fn deletion_shifts_back_by_its_length(base in doc(), block in foreign(), at in any::<usize>(), cut in any::<(usize, usize)>()) {
        let chars: Vec<char> = base.chars().collect();
        let p = at % (chars.len() + 1);
        let mut old = chars.clone();
        old.splice(p..p, block.chars());
        let old: String = old.into_iter().collect();
        let len = block.chars().count();
        let start = cut.0 % len;
        let k = 1 + cut.1 % (len - start);
        let mut new: Vec<char> = old.chars().collect();
        new.drain(p + start..p + start + k);
        let new: String = new.into_iter().collect();
        let offsets = whitespace_offsets(&old);
        for (&o, pos) in offsets.iter().zip(remap_offsets(&old, &new, &offsets)) {
            let expected = if o >= p + start + k { o - k } else { o };
            prop_assert_eq!(pos, AnchorPosition::Live(expected));
        }
    }

    #[test]
    fn surviving_anchors_keep_their_order(old in doc(), script in edits()) {
        let new = apply(&old, &script);
        let offsets = whitespace_offsets(&old);
        let live: Vec<usize> = remap_offsets(&old, &new, &offsets).into_iter().filter_map(|p| p.offset()).collect();
        prop_assert!(live.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rendering_preserves_text(text in doc(), picks in proptest::collection::vec(any::<usize>(), 0..8)) {
        let rev = revision(&text);
        let offsets = whitespace_offsets(&text);
        let anchors: Vec<Anchor> = if offsets.is_empty() {
            Vec::new()
        } else {
            picks.iter().map(|p| anchor_at(rev.document_id, offsets[p % offsets.len()])).collect()
        };
        let refs: Vec<&Anchor> = anchors.iter().collect();
        let rendered = render_annotated(&rev, &refs, anchors.first().map(|a| a.id)).unwrap();
        prop_assert_eq!(rendered.plain_text(), text);
        let markers = rendered
            .segments
            .iter()
            .filter(|s| matches!(s, deme_core::document::Segment::Marker { .. }))
            .count();
        prop_assert_eq!(markers, anchors.len());
    }
}

#[test]
fn full_table_agrees_with_enumeration_on_small_inputs() {
    let alphabet = ['a', ' ', 'b'];
    let words: Vec<Vec<char>> = (0..=4)
        .flat_map(|n| {
            (0..3usize.pow(n)).map(move |mut k| {
                (0..n)
                    .map(|_| {
                        let c = alphabet[k % 3];
                        k /= 3;
                        c
                    })
                    .collect()
            })
        })
        .collect();
    for a in words.iter().step_by(3) {
        for b in words.iter().step_by(2) {
            assert_eq!(align_chars(a, b), brute_force_alignment(a, b), "{a:?} {b:?}");
        }
    }
}

#[test]
fn anchor_on_edited_word_boundary() {
    let old = "The workshops should be shorter and more focused.";
    let new = "The workshops must be shorter and more focused.";
    let at = old.find(" be").unwrap();
    assert_eq!(
        remap_offsets(old, new, &[at]),
        vec![AnchorPosition::Live(new.find(" be").unwrap())]
    );
}

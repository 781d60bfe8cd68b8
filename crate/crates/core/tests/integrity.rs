use deme_testkit::fuzz::{index_faults, referential_faults, run};

fn check(ops: usize, seed: u64) {
    let run = run(ops, seed).unwrap();
    assert!(
        run.applied > ops / 2,
        "only {} of {ops} applied: {:?}",
        run.applied,
        run.refused
    );
    run.deme.check_integrity(run.group).unwrap();
    let bundle = run.deme.export_group(run.group, run.moderator, run.end).unwrap();
    assert_eq!(referential_faults(&bundle.content), Vec::<String>::new());
    assert_eq!(
        index_faults(&run.deme, &bundle.content, run.moderator),
        Vec::<String>::new()
    );
}

#[test]
fn random_operations_keep_references_whole() {
    for seed in 0..4 {
        check(1500, seed);
    }
}

#[test]
fn a_bundle_with_a_dangling_reply_is_caught() {
    let run = run(300, 99).unwrap();
    let mut bundle = run.deme.export_group(run.group, run.moderator, run.end).unwrap();
    let reply = bundle
        .content
        .comments
        .iter_mut()
        .find(|c| c.reply_parent().is_some())
        .unwrap();
    reply.target = deme_core::CommentTarget::ReplyTo {
        comment: deme_core::CommentId::new(),
    };
    assert_eq!(referential_faults(&bundle.content).len(), 1);
}

use std::collections::BTreeSet;

use deme_core::decision::{BallotContent, YesNo};
use deme_core::{
    ActivationState, ActivationTarget, AreaId, CommentId, CommentTarget, Deme, Error, ExportBundle, GroupAccess,
    IndexOrder, JoinPolicy, NewComment, Relation, Scope, TargetSpec, UserId,
};
use deme_testkit::access::{expected, ACTIONS, MODERATOR};
use deme_testkit::populate::{kinds, populated_group};
use deme_testkit::t;

struct Cast {
    moderator: UserId,
    member: UserId,
    linked: UserId,
    outsider: UserId,
}

fn world(access: GroupAccess) -> (Deme, AreaId, Cast) {
    let deme = Deme::default();
    let moderator = deme.register_user("Mod", Some("mod@example.org")).unwrap().user_id;
    let member = deme
        .register_user("Member", Some("member@example.org"))
        .unwrap()
        .user_id;
    let linked = deme
        .register_user("Linked", Some("linked@example.org"))
        .unwrap()
        .user_id;
    let outsider = deme.register_user("Outsider", Some("out@example.org")).unwrap().user_id;
    let group = deme
        .create_group("Owners", "", access, JoinPolicy::OpenJoin, moderator, t(0))
        .unwrap()
        .id;
    deme.join_group(group, member, t(1)).unwrap();
    let other = deme
        .create_group("Others", "", GroupAccess::Closed, JoinPolicy::OpenJoin, linked, t(0))
        .unwrap()
        .id;
    let area = deme.create_meeting_area(group, moderator, "Area", "", t(2)).unwrap().id;
    deme.link_area(area, other, moderator).unwrap();
    (
        deme,
        area,
        Cast {
            moderator,
            member,
            linked,
            outsider,
        },
    )
}

#[test]
fn access_matrix_matches_the_table() {
    let mut checked = 0;
    for access in [GroupAccess::Open, GroupAccess::Closed] {
        let (deme, area, cast) = world(access);
        let users = [
            (Relation::OwnerMember, Some(cast.member)),
            (Relation::LinkedMember, Some(cast.linked)),
            (Relation::Outsider, Some(cast.outsider)),
            (Relation::Outsider, None),
        ];
        for (relation, user) in users {
            for action in ACTIONS {
                assert_eq!(
                    deme.authorize(user, Scope::Area(area), action),
                    expected(relation, access, action),
                    "{relation:?} {access:?} {action:?} {user:?}"
                );
                checked += 1;
            }
        }
        for (k, action) in ACTIONS.into_iter().enumerate() {
            assert_eq!(
                deme.authorize(Some(cast.moderator), Scope::Area(area), action),
                MODERATOR[k]
            );
        }
    }
    assert_eq!(checked, 24);
}

#[test]
fn outsiders_of_closed_groups_see_only_the_header() {
    let (deme, area, cast) = world(GroupAccess::Closed);
    let group = deme.owner_of(area).unwrap();
    let outside = deme.homepage(group, Some(cast.outsider)).unwrap();
    assert!(outside.areas.is_empty());
    assert!(outside.viewer.can_join);
    assert_eq!(outside.group.name, "Owners");
    assert_eq!(deme.homepage(group, Some(cast.member)).unwrap().areas.len(), 1);
    assert_eq!(deme.folio(area, None), Err(Error::AccessDenied));
    assert_eq!(deme.members(group, Some(cast.outsider)), Err(Error::AccessDenied));
}

#[test]
fn anonymous_readers_of_open_groups() {
    let (deme, area, cast) = world(GroupAccess::Open);
    let group = deme.owner_of(area).unwrap();
    assert_eq!(deme.homepage(group, None).unwrap().areas.len(), 1);
    assert!(deme.folio(area, None).unwrap().is_empty());
    let draft = NewComment {
        subject: None,
        body: "hello".into(),
        target: TargetSpec::Global,
    };
    assert_eq!(
        deme.post_comment(area, cast.outsider, draft.clone(), t(3)),
        Err(Error::AccessDenied)
    );
    let c = deme.post_comment(area, cast.linked, draft, t(3)).unwrap();
    assert_eq!(c.target, CommentTarget::Global);
}

#[test]
fn populated_fixture_covers_the_model() {
    let deme = Deme::default();
    let p = populated_group(&deme).unwrap();
    assert_eq!(
        kinds(&deme, &p),
        ["decision", "discussion_item", "document", "link", "poll"]
    );
    assert!(p.areas.len() >= 2);
    assert!(p.comments.len() >= 20);
    deme.check_integrity(p.group).unwrap();
    let anchors = deme.anchors(p.document, Some(p.members[0])).unwrap();
    assert_eq!(anchors.len(), 5);
    assert!(anchors
        .iter()
        .any(|a| a.positions.get(&2).is_some_and(|pos| pos.offset().is_none())));
}

#[test]
fn indexes_are_permutations_of_each_other() {
    let deme = Deme::default();
    let p = populated_group(&deme).unwrap();
    for &area in &p.areas {
        let ids = |order| -> BTreeSet<CommentId> {
            deme.comments_index(area, Some(p.members[1]), order)
                .unwrap()
                .into_iter()
                .map(|h| h.comment_id)
                .collect()
        };
        let chrono = deme
            .comments_index(area, Some(p.members[1]), IndexOrder::Chronological)
            .unwrap();
        assert!(chrono.windows(2).all(|w| w[0].created_at <= w[1].created_at));
        assert_eq!(ids(IndexOrder::Chronological), ids(IndexOrder::Threaded));
        assert_eq!(ids(IndexOrder::Chronological).len(), chrono.len());
    }
}

#[test]
fn activation_follows_references_and_subjects() {
    let deme = Deme::default();
    let p = populated_group(&deme).unwrap();
    let viewer = Some(p.members[1]);
    let index = deme
        .comments_index(p.areas[0], viewer, IndexOrder::Chronological)
        .unwrap();
    let intext = index
        .iter()
        .find(|h| h.item_reference.as_ref().is_some_and(|r| r.anchor_id.is_some()))
        .unwrap();
    let on_item = index
        .iter()
        .find(|h| h.item_reference.as_ref().is_some_and(|r| r.anchor_id.is_none()))
        .unwrap();
    let global = index.iter().find(|h| h.item_reference.is_none()).unwrap();

    let state = deme
        .activate(
            viewer,
            ActivationTarget::Reference(intext.comment_id),
            ActivationState::default(),
        )
        .unwrap();
    let reference = intext.item_reference.clone().unwrap();
    assert_eq!(state.displayed_item, Some(reference.item_id));
    assert_eq!(state.highlighted_anchor(), reference.anchor_id);

    let next = deme
        .activate(viewer, ActivationTarget::Subject(on_item.comment_id), state)
        .unwrap();
    assert_eq!(next.active_comment, Some(on_item.comment_id));
    assert_eq!(next.displayed_item, state.displayed_item);
    assert_eq!(next.highlighted_anchor(), None);

    assert_eq!(
        deme.activate(viewer, ActivationTarget::Reference(global.comment_id), next),
        Err(Error::NoReference)
    );
    assert_eq!(
        deme.activate(Some(UserId::new()), ActivationTarget::Subject(global.comment_id), next),
        Err(Error::AccessDenied)
    );
}

#[test]
fn export_import_round_trip_is_byte_equal() {
    let source = Deme::default();
    let p = populated_group(&source).unwrap();
    let moderator = p.members[0];
    let bundle = source.export_group(p.group, moderator, t(200)).unwrap();
    assert_eq!(bundle.content.polls.iter().filter(|p| p.closure.is_some()).count(), 4);

    let bytes = bundle.to_json();
    let target = Deme::default();
    target
        .import_group(ExportBundle::from_json(&bytes).unwrap(), moderator, None)
        .unwrap();
    let again = target.export_group(p.group, moderator, t(300)).unwrap();
    assert_ne!(again.instance, bundle.instance);
    assert_eq!(again.canonical_content(), bundle.canonical_content());
    target.check_integrity(p.group).unwrap();
}

#[test]
fn secret_ballots_are_sealed_on_import() {
    let source = Deme::default();
    let p = populated_group(&source).unwrap();
    let moderator = p.members[0];
    let secret = p.polls[2];
    let bundle = source.export_group(p.group, moderator, t(90)).unwrap();
    let exported = bundle.content.polls.iter().find(|q| q.id == secret).unwrap();
    assert!(exported.ballots.is_empty());
    assert!(exported.sealed.is_some());

    let target = Deme::default();
    target.import_group(bundle, moderator, None).unwrap();
    assert_eq!(
        target.tally(secret, Some(moderator), t(95)).unwrap(),
        source.tally(secret, Some(moderator), t(95)).unwrap()
    );
    let ballot = BallotContent::ApprovalSet {
        options: BTreeSet::from([0]),
    };
    assert_eq!(
        target.cast_ballot(secret, moderator, ballot, t(95)),
        Err(Error::BallotSealed)
    );

    // open ballots carry over as ballots and stay castable
    let decision = p.polls[3];
    let recast = BallotContent::Consent {
        stance: deme_core::decision::Stance::Agree,
        reason: None,
    };
    target.cast_ballot(decision, p.members[1], recast, t(95)).unwrap();
}

#[test]
fn import_refuses_bad_bundles() {
    let source = Deme::default();
    let p = populated_group(&source).unwrap();
    let moderator = p.members[0];
    let bundle = source.export_group(p.group, moderator, t(200)).unwrap();

    assert_eq!(
        source.import_group(bundle.clone(), moderator, None).unwrap_err(),
        Error::DuplicateName("Labortech".into())
    );
    assert!(matches!(
        source.import_group(bundle.clone(), moderator, Some("Labortech 2")),
        Err(Error::IntegrityViolation(_))
    ));

    let mut newer = bundle.clone();
    newer.format_version = 2;
    assert_eq!(
        Deme::default().import_group(newer, moderator, None),
        Err(Error::UnsupportedVersion(2))
    );

    let mut dangling = bundle.clone();
    let reply = dangling
        .content
        .comments
        .iter_mut()
        .find(|c| matches!(c.target, CommentTarget::ReplyTo { .. }))
        .unwrap();
    reply.target = CommentTarget::ReplyTo {
        comment: CommentId::new(),
    };
    assert!(matches!(
        Deme::default().import_group(dangling, moderator, None),
        Err(Error::IntegrityViolation(_))
    ));

    let mut twice = bundle.clone();
    let first = twice.content.items[0].clone();
    twice.content.items.push(first);
    assert!(matches!(
        Deme::default().import_group(twice, moderator, None),
        Err(Error::IntegrityViolation(_))
    ));

    let stranger = Deme::default();
    // the first registered user becomes the operator
    stranger.register_user("Someone", None).unwrap();
    let nobody = stranger.register_user("Nobody", None).unwrap().user_id;
    assert_eq!(stranger.import_group(bundle, nobody, None), Err(Error::NotAuthorized));
}

#[test]
fn closed_polls_do_not_move() {
    let deme = Deme::default();
    let p = populated_group(&deme).unwrap();
    let adopt = p.polls[1];
    let view = deme.poll_view(adopt, Some(p.members[0]), t(80)).unwrap();
    assert_eq!(view.outcome.closed_at, Some(t(70)));
    let late = BallotContent::YesNoAbstain { choice: YesNo::No };
    assert_eq!(
        deme.cast_ballot(adopt, p.members[1], late, t(80)),
        Err(Error::PollClosed)
    );
    assert_eq!(
        deme.poll_view(adopt, Some(p.members[0]), t(500)).unwrap().outcome,
        view.outcome
    );
}

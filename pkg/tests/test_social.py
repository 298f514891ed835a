import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearhub.errors import (
    AlreadyFriends,
    DefaultGroupProtected,
    DuplicateGroupName,
    NoFixForViewer,
    NoPendingRequest,
    SelfFriendship,
    UnknownGroup,
    UnknownUser,
)
from nearhub.social import (
    DEFAULT_PRIVACY,
    FIELD_GROUPS,
    RECOMMEND_D0_M,
    TIERS,
    filter_profile,
    jaccard,
    score_candidates,
)

from .conftest import befriend, register_user

DALIAN = (38.9140, 121.6147)


class TestFriendship:
    def test_request_accept_is_symmetric(self, app):
        ta = register_user(app, "alice")
        tb = register_user(app, "bob")
        assert app.friend_request(ta, "bob")["status"] == "pending"
        assert app.requests_list(tb)["incoming"] == ["alice"]
        app.friend_accept(tb, "alice")
        assert [f["username"] for f in app.friends_list(ta)] == ["bob"]
        assert [f["username"] for f in app.friends_list(tb)] == ["alice"]

    def test_remove_clears_both_sides(self, app):
        ta = register_user(app, "alice")
        tb = register_user(app, "bob")
        befriend(app, ta, "alice", tb, "bob")
        app.friend_remove(ta, "bob")
        assert app.friends_list(ta) == []
        assert app.friends_list(tb) == []

    def test_self_request_rejected(self, app):
        ta = register_user(app, "alice")
        with pytest.raises(SelfFriendship):
            app.friend_request(ta, "alice")

    def test_accept_without_request(self, app):
        ta = register_user(app, "alice")
        register_user(app, "bob")
        with pytest.raises(NoPendingRequest):
            app.friend_accept(ta, "bob")

    def test_double_request_becomes_accept(self, app):
        ta = register_user(app, "alice")
        tb = register_user(app, "bob")
        app.friend_request(ta, "bob")
        assert app.friend_request(tb, "alice")["status"] == "accepted"
        assert [f["username"] for f in app.friends_list(ta)] == ["bob"]

    def test_request_unknown_user(self, app):
        ta = register_user(app, "alice")
        with pytest.raises(UnknownUser):
            app.friend_request(ta, "ghost")

    def test_already_friends(self, app):
        ta = register_user(app, "alice")
        tb = register_user(app, "bob")
        befriend(app, ta, "alice", tb, "bob")
        with pytest.raises(AlreadyFriends):
            app.friend_request(ta, "bob")

    def test_alias(self, app):
        ta = register_user(app, "alice")
        tb = register_user(app, "bob")
        befriend(app, ta, "alice", tb, "bob")
        app.friend_set_alias(ta, "bob", "Bobby the Builder")
        assert app.friends_list(ta)[0]["alias"] == "Bobby the Builder"
        assert app.friends_list(tb)[0]["alias"] is None

    def test_symmetry_under_fuzz(self, app):
        rng = np.random.default_rng(8)
        names = [f"user{i}" for i in range(6)]
        tokens = {n: register_user(app, n) for n in names}
        for _ in range(300):
            a, b = rng.choice(names, size=2, replace=False)
            op = rng.choice(["request", "accept", "remove"])
            try:
                if op == "request":
                    app.friend_request(tokens[a], b)
                elif op == "accept":
                    app.friend_accept(tokens[a], b)
                else:
                    app.friend_remove(tokens[a], b)
            except (SelfFriendship, AlreadyFriends, NoPendingRequest, Exception):
                pass
            state = app.engine.read(lambda s: {
                u: set(s.social.friends_of(s.identity.resolve_username(u)))
                for u in names
            })
            ids = app.engine.read(lambda s: {
                u: s.identity.resolve_username(u) for u in names
            })
            for u in names:
                for fid in state[u]:
                    friend_name = next(n for n, i in ids.items() if i == fid)
                    assert ids[u] in state[friend_name]


class TestGroups:
    def test_defaults_exist(self, app):
        ta = register_user(app, "alice")
        assert [g["name"] for g in app.groups_list(ta)] == ["My Friends", "Strangers"]

    def test_default_protected(self, app):
        ta = register_user(app, "alice")
        for name in ("My Friends", "Strangers"):
            with pytest.raises(DefaultGroupProtected):
                app.manage_group(ta, "delete", name)
            with pytest.raises(DefaultGroupProtected):
                app.manage_group(ta, "rename", name, "X")

    def test_create_move_delete_falls_back(self, app):
        ta = register_user(app, "alice")
        tb = register_user(app, "bob")
        befriend(app, ta, "alice", tb, "bob")
        app.manage_group(ta, "create", "Classmates")
        app.friend_move_group(ta, "bob", "Classmates")
        assert app.friends_list(ta)[0]["group"] == "Classmates"
        app.manage_group(ta, "delete", "Classmates")
        assert app.friends_list(ta)[0]["group"] == "My Friends"

    def test_duplicate_name(self, app):
        ta = register_user(app, "alice")
        app.manage_group(ta, "create", "Crew")
        with pytest.raises(DuplicateGroupName):
            app.manage_group(ta, "create", "Crew")

    def test_move_to_unknown_group(self, app):
        ta = register_user(app, "alice")
        tb = register_user(app, "bob")
        befriend(app, ta, "alice", tb, "bob")
        with pytest.raises(UnknownGroup):
            app.friend_move_group(ta, "bob", "Nowhere")

    def test_rename(self, app):
        ta = register_user(app, "alice")
        app.manage_group(ta, "create", "Crew")
        app.manage_group(ta, "rename", "Crew", "Squad")
        assert "Squad" in [g["name"] for g in app.groups_list(ta)]


def make_profile():
    return {
        "user_id": "u1",
        "username": "owner",
        "nickname": "Own",
        "avatar": "blob1",
        "interests": ["maps"],
        "sections": {
            "basic": {"gender": "Female", "birthday": "1990-01-01",
                      "status_text": "hello"},
            "contact": {"email": "o@example.com", "phone": "13800000000"},
            "location": {"city": "Dalian", "country": "China"},
        },
    }


FIELD_PATHS = {
    "phone": ("contact", "phone"),
    "gender": ("basic", "gender"),
    "birthday": ("basic", "birthday"),
    "email": ("contact", "email"),
    "status": ("basic", "status_text"),
}


def field_present(view, group):
    if group == "location":
        return "location" in view["sections"]
    section, name = FIELD_PATHS[group]
    return name in view["sections"].get(section, {})


class TestPrivacyFilter:
    def test_truth_table_exhaustive(self):
        profile = make_profile()
        for group in FIELD_GROUPS:
            for tier in TIERS:
                policy = dict(DEFAULT_PRIVACY)
                policy[group] = tier
                for rel in ("owner", "friend", "stranger"):
                    view = filter_profile(profile, policy, rel)
                    expected = (
                        rel == "owner"
                        or tier == "Everyone"
                        or (tier == "FriendsOnly" and rel == "friend")
                    )
                    assert field_present(view, group) == expected, (group, tier, rel)

    def test_nobody_dominates_even_for_friends(self):
        policy = dict(DEFAULT_PRIVACY, phone="Nobody")
        view = filter_profile(make_profile(), policy, "friend")
        assert "phone" not in view["sections"]["contact"]

    def test_owner_sees_everything(self):
        policy = {g: "Nobody" for g in FIELD_GROUPS}
        view = filter_profile(make_profile(), policy, "owner")
        assert field_present(view, "phone")
        assert field_present(view, "location")

    def test_always_public_fields_survive(self):
        policy = {g: "Nobody" for g in FIELD_GROUPS}
        view = filter_profile(make_profile(), policy, "stranger")
        assert view["nickname"] == "Own"
        assert view["avatar"] == "blob1"
        assert view["username"] == "owner"
        assert view["interests"] == ["maps"]

    @settings(max_examples=100)
    @given(st.fixed_dictionaries({g: st.sampled_from(TIERS) for g in FIELD_GROUPS}),
           st.sampled_from(["owner", "friend", "stranger"]))
    def test_idempotent(self, policy, rel):
        once = filter_profile(make_profile(), policy, rel)
        twice = filter_profile(once, policy, rel)
        assert once == twice

    def test_monotone_across_tiers(self):
        profile = make_profile()
        for group in FIELD_GROUPS:
            visible = {}
            for tier in TIERS:
                policy = dict(DEFAULT_PRIVACY)
                policy[group] = tier
                visible[tier] = {
                    rel for rel in ("owner", "friend", "stranger")
                    if field_present(filter_profile(profile, policy, rel), group)
                }
            assert visible["Nobody"] <= visible["FriendsOnly"] <= visible["Everyone"]


class TestRecommend:
    def test_identical_interests_distance_zero(self):
        out = score_candidates({"a", "b"}, lambda uid: 0.0,
                               [("u2", "peer", {"a", "b"})], 5)
        assert out[0].score == pytest.approx(1.0)
        assert out[0].shared_interest_count == 2

    def test_disjoint_interests_excluded(self):
        out = score_candidates({"a"}, lambda uid: None, [("u2", "p", {"z"})], 5)
        assert out == []

    def test_decay_formula(self):
        out = score_candidates({"a"}, lambda uid: RECOMMEND_D0_M,
                               [("u2", "p", {"a"})], 5)
        assert out[0].score == pytest.approx(math.exp(-1.0))

    def test_matches_bruteforce_over_seeded_users(self, app):
        rng = np.random.default_rng(55)
        tags = ["hiking", "chess", "coffee", "maps", "sailing", "photo"]
        me = register_user(app, "viewer", interests=["hiking", "maps"],
                           position=DALIAN)
        candidates = {}
        for i in range(50):
            name = f"cand{i:02d}"
            interests = list(rng.choice(tags, size=rng.integers(0, 4), replace=False))
            pos = (DALIAN[0] + float(rng.uniform(-0.2, 0.2)),
                   DALIAN[1] + float(rng.uniform(-0.2, 0.2))) \
                if rng.random() < 0.8 else None
            register_user(app, name, interests=interests, position=pos)
            candidates[name] = (set(interests), pos)

        got = app.recommend(me, k=10)

        from nearhub.geomath import GeoPoint, haversine
        expected = []
        for name, (interests, pos) in candidates.items():
            base = jaccard({"hiking", "maps"}, interests)
            if base == 0:
                continue
            decay = 1.0
            if pos is not None:
                decay = math.exp(-haversine(GeoPoint(*DALIAN), GeoPoint(*pos))
                                 / RECOMMEND_D0_M)
            expected.append((name, base * decay))
        expected.sort(key=lambda t: (-t[1], t[0]))
        assert [(r["username"], pytest.approx(r["score"])) for r in got] == \
            [(n, pytest.approx(s)) for n, s in expected[:10]]
        assert all(0 <= r["score"] <= 1 for r in got)

    def test_excludes_self_and_friends_and_zero_scores(self, app):
        ta = register_user(app, "alice", interests=["x"])
        tb = register_user(app, "bob", interests=["x"])
        register_user(app, "carol", interests=["x"])
        register_user(app, "noint", interests=["y"])
        befriend(app, ta, "alice", tb, "bob")
        names = [r["username"] for r in app.recommend(ta, k=10)]
        assert names == ["carol"]

    def test_tag_relabeling_keeps_ranking(self):
        rng = np.random.default_rng(4)
        tags = [f"t{i}" for i in range(8)]
        viewer = set(rng.choice(tags, 3, replace=False))
        cands = [
            (f"u{i}", f"u{i}", set(rng.choice(tags, rng.integers(1, 5), replace=False)))
            for i in range(20)
        ]
        base = [r.user_id for r in score_candidates(viewer, lambda u: None, cands, 20)]
        mapping = {t: f"re-{t}" for t in tags}
        viewer2 = {mapping[t] for t in viewer}
        cands2 = [(u, n, {mapping[t] for t in s}) for u, n, s in cands]
        relabeled = [r.user_id for r in score_candidates(viewer2, lambda u: None, cands2, 20)]
        assert base == relabeled


class TestVisibleNearby:
    def test_requires_viewer_fix(self, app):
        ta = register_user(app, "alice")
        with pytest.raises(NoFixForViewer):
            app.nearby(ta)

    def test_location_tiers_respected(self, app):
        ta = register_user(app, "alice", position=DALIAN)
        tb = register_user(app, "bob",
                           position=(DALIAN[0] + 0.001, DALIAN[1]))
        tc = register_user(app, "carol",
                           position=(DALIAN[0] + 0.002, DALIAN[1]))
        td = register_user(app, "dan",
                           position=(DALIAN[0] + 0.003, DALIAN[1]))
        befriend(app, ta, "alice", tb, "bob")
        # bob: FriendsOnly (default) and friend -> visible
        app.privacy_set(tc, {"location": "Nobody"})       # carol hidden
        app.privacy_set(td, {"location": "Everyone"})     # dan visible
        names = [h["username"] for h in app.nearby(ta, radius_m=2000)]
        assert names == ["bob", "dan"]

    def test_friends_only_flag(self, app):
        ta = register_user(app, "alice", position=DALIAN)
        tb = register_user(app, "bob", position=(DALIAN[0] + 0.001, DALIAN[1]))
        td = register_user(app, "dan", position=(DALIAN[0] + 0.002, DALIAN[1]))
        app.privacy_set(td, {"location": "Everyone"})
        befriend(app, ta, "alice", tb, "bob")
        assert [h["username"] for h in app.nearby(ta, friends_only=True)] == ["bob"]

    def test_nickname_always_present_and_filtered_profile(self, app):
        ta = register_user(app, "alice", position=DALIAN)
        tb = register_user(app, "bob", position=(DALIAN[0] + 0.001, DALIAN[1]))
        app.privacy_set(tb, {"location": "Everyone", "phone": "Nobody"})
        hit = app.nearby(ta)[0]
        assert hit["nickname"] == "Bob"
        assert "phone" not in hit["profile"]["sections"]["contact"]

    def test_matches_bruteforce_on_200_users(self, app):
        rng = np.random.default_rng(66)
        ta = register_user(app, "viewer", position=DALIAN)
        tiers = ["Everyone", "FriendsOnly", "Nobody"]
        world = {}
        for i in range(200):
            name = f"n{i:03d}"
            pos = (DALIAN[0] + float(rng.uniform(-0.05, 0.05)),
                   DALIAN[1] + float(rng.uniform(-0.05, 0.05)))
            tok = register_user(app, name, position=pos)
            tier = tiers[int(rng.integers(3))]
            app.privacy_set(tok, {"location": tier})
            friend = rng.random() < 0.3
            if friend:
                app.friend_request(ta, name)
                app.friend_accept(tok, "viewer")
            world[name] = (pos, tier, friend)

        radius = 3000.0
        got = [h["username"] for h in app.nearby(ta, radius_m=radius)]

        from nearhub.geomath import GeoPoint, haversine
        center = GeoPoint(*DALIAN)
        expected = []
        for name, (pos, tier, friend) in world.items():
            d = haversine(center, GeoPoint(*pos))
            if d > radius:
                continue
            visible = tier == "Everyone" or (tier == "FriendsOnly" and friend)
            if visible:
                expected.append((d, name))
        expected.sort()
        assert got == [n for _, n in expected]

"""Friend graph, groups, per-field privacy tiers, and friend matching.

Friendship needs mutual consent: a request followed by an accept creates a
symmetric edge. Each endpoint independently files the other into one of its
groups ("My Friends" and "Strangers" exist from day one and cannot be
touched) and may set a display alias.

Privacy is a per-owner map from field groups to Everyone / FriendsOnly /
Nobody; ``filter_profile`` applies it to the sectioned profile view and
drops redacted fields entirely instead of blanking them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    AlreadyFriends,
    DefaultGroupProtected,
    DuplicateGroupName,
    NoPendingRequest,
    NotFriends,
    SelfFriendship,
    UnknownGroup,
)

TIERS = ("Everyone", "FriendsOnly", "Nobody")

FIELD_GROUPS = ("phone", "gender", "birthday", "email", "location", "status")

DEFAULT_PRIVACY = {
    "phone": "FriendsOnly",
    "gender": "Everyone",
    "birthday": "FriendsOnly",
    "email": "FriendsOnly",
    "location": "FriendsOnly",
    "status": "Everyone",
}

DEFAULT_GROUPS = ("My Friends", "Strangers")

# Where each privacy field group lives in the sectioned profile view.
_GROUP_PATHS = {
    "phone": ("contact", "phone"),
    "gender": ("basic", "gender"),
    "birthday": ("basic", "birthday"),
    "email": ("contact", "email"),
    "status": ("basic", "status_text"),
}

# Distance scale of the recommendation decay: candidates this far away
# keep exp(-1) of their interest score.
RECOMMEND_D0_M = 10_000.0


@dataclass
class Edge:
    group_id: str
    alias: str | None = None


@dataclass
class Group:
    group_id: str
    owner: str
    name: str


class SocialStore:
    def __init__(self):
        self._edges: dict[str, dict[str, Edge]] = {}
        self._pending: dict[str, set[str]] = {}  # target -> requesters
        self._groups: dict[str, dict[str, Group]] = {}  # owner -> id -> group
        self._privacy: dict[str, dict[str, str]] = {}
        self._next_gid = 1

    # -- lifecycle ------------------------------------------------------------

    def has_user(self, user_id: str) -> bool:
        return user_id in self._privacy

    def init_user(self, user_id: str) -> None:
        """Install the default groups and privacy tiers at registration."""
        self._edges.setdefault(user_id, {})
        self._pending.setdefault(user_id, set())
        groups = self._groups.setdefault(user_id, {})
        for name in DEFAULT_GROUPS:
            gid = f"g{self._next_gid}"
            self._next_gid += 1
            groups[gid] = Group(gid, user_id, name)
        self._privacy[user_id] = dict(DEFAULT_PRIVACY)

    # -- friendship -----------------------------------------------------------

    def is_friend(self, a: str, b: str) -> bool:
        return b in self._edges.get(a, {})

    def friends_of(self, user_id: str) -> dict[str, Edge]:
        return self._edges.get(user_id, {})

    def incoming_requests(self, user_id: str) -> list[str]:
        return sorted(self._pending.get(user_id, ()))

    def outgoing_requests(self, user_id: str) -> list[str]:
        return sorted(t for t, reqs in self._pending.items() if user_id in reqs)

    def request_friend(self, requester: str, target: str) -> str:
        """File a friend request; a reciprocal pending request means both
        sides consented, so it completes immediately. Returns the new
        state: 'pending' or 'accepted'."""
        if requester == target:
            raise SelfFriendship("cannot befriend yourself")
        if self.is_friend(requester, target):
            raise AlreadyFriends("already friends")
        # A reciprocal pending request means both sides already consented.
        if target in self._pending.get(requester, set()):
            self._pending[requester].discard(target)
            self._link(requester, target)
            return "accepted"
        self._pending.setdefault(target, set()).add(requester)
        return "pending"

    def accept_friend(self, user_id: str, requester: str) -> None:
        if requester not in self._pending.get(user_id, ()):
            raise NoPendingRequest(f"no pending request from {requester!r}")
        self._pending[user_id].discard(requester)
        self._link(user_id, requester)

    def remove_friend(self, user_id: str, friend: str) -> None:
        if not self.is_friend(user_id, friend):
            raise NotFriends(f"{friend!r} is not on the friend list")
        del self._edges[user_id][friend]
        del self._edges[friend][user_id]

    def _link(self, a: str, b: str) -> None:
        self._edges.setdefault(a, {})[b] = Edge(self._default_group_id(a))
        self._edges.setdefault(b, {})[a] = Edge(self._default_group_id(b))

    def set_alias(self, user_id: str, friend: str, alias: str | None) -> None:
        edge = self._edges.get(user_id, {}).get(friend)
        if edge is None:
            raise NotFriends(f"{friend!r} is not on the friend list")
        edge.alias = alias or None

    def move_to_group(self, user_id: str, friend: str, group_name: str) -> None:
        edge = self._edges.get(user_id, {}).get(friend)
        if edge is None:
            raise NotFriends(f"{friend!r} is not on the friend list")
        edge.group_id = self._group_by_name(user_id, group_name).group_id

    # -- groups -----------------------------------------------------------------

    def groups_of(self, user_id: str) -> list[Group]:
        return sorted(
            self._groups.get(user_id, {}).values(),
            key=lambda g: int(g.group_id[1:]),
        )

    def create_group(self, user_id: str, name: str) -> Group:
        if not name.strip():
            raise ValueError("group name must not be empty")
        if any(g.name == name for g in self._groups.get(user_id, {}).values()):
            raise DuplicateGroupName(f"group {name!r} already exists")
        gid = f"g{self._next_gid}"
        self._next_gid += 1
        group = Group(gid, user_id, name)
        self._groups.setdefault(user_id, {})[gid] = group
        return group

    def rename_group(self, user_id: str, name: str, new_name: str) -> Group:
        group = self._group_by_name(user_id, name)
        if group.name in DEFAULT_GROUPS:
            raise DefaultGroupProtected(f"{group.name!r} cannot be renamed")
        if any(g.name == new_name for g in self._groups[user_id].values()):
            raise DuplicateGroupName(f"group {new_name!r} already exists")
        if not new_name.strip():
            raise ValueError("group name must not be empty")
        group.name = new_name
        return group

    def delete_group(self, user_id: str, name: str) -> None:
        """Remove a non-default group; members fall back to My Friends."""
        group = self._group_by_name(user_id, name)
        if group.name in DEFAULT_GROUPS:
            raise DefaultGroupProtected(f"{group.name!r} cannot be deleted")
        fallback = self._default_group_id(user_id)
        for edge in self._edges.get(user_id, {}).values():
            if edge.group_id == group.group_id:
                edge.group_id = fallback
        del self._groups[user_id][group.group_id]

    def group_name(self, user_id: str, group_id: str) -> str:
        return self._groups[user_id][group_id].name

    def _group_by_name(self, user_id: str, name: str) -> Group:
        for g in self._groups.get(user_id, {}).values():
            if g.name == name:
                return g
        raise UnknownGroup(f"no group named {name!r}")

    def _default_group_id(self, user_id: str) -> str:
        return self._group_by_name(user_id, DEFAULT_GROUPS[0]).group_id

    # -- privacy -----------------------------------------------------------------

    def privacy_of(self, user_id: str) -> dict[str, str]:
        return dict(self._privacy.get(user_id, DEFAULT_PRIVACY))

    def set_privacy(self, user_id: str, tiers: dict[str, str]) -> dict[str, str]:
        for group, tier in tiers.items():
            if group not in FIELD_GROUPS:
                raise ValueError(f"unknown privacy field group {group!r}")
            if tier not in TIERS:
                raise ValueError(f"unknown privacy tier {tier!r}")
        current = self._privacy.setdefault(user_id, dict(DEFAULT_PRIVACY))
        current.update(tiers)
        return dict(current)

    # -- persistence ----------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "next_gid": self._next_gid,
            "edges": {
                uid: {
                    fid: {"group_id": e.group_id, "alias": e.alias}
                    for fid, e in edges.items()
                }
                for uid, edges in self._edges.items()
            },
            "pending": {uid: sorted(reqs) for uid, reqs in self._pending.items()},
            "groups": {
                uid: {gid: g.name for gid, g in groups.items()}
                for uid, groups in self._groups.items()
            },
            "privacy": self._privacy,
        }

    def load_dict(self, data: dict) -> None:
        self.__init__()
        self._next_gid = int(data["next_gid"])
        for uid, edges in data["edges"].items():
            self._edges[uid] = {
                fid: Edge(e["group_id"], e["alias"]) for fid, e in edges.items()
            }
        for uid, reqs in data["pending"].items():
            self._pending[uid] = set(reqs)
        for uid, groups in data["groups"].items():
            self._groups[uid] = {gid: Group(gid, uid, name) for gid, name in groups.items()}
        for uid, tiers in data["privacy"].items():
            self._privacy[uid] = dict(tiers)


# -- pure functions -------------------------------------------------------------


def filter_profile(profile: dict, policy: dict[str, str], relationship: str) -> dict:
    """Redact a sectioned profile for a viewer.

    relationship is 'owner', 'friend', or 'stranger'. Redacted fields are
    removed, never blanked, so filtering an already-filtered view is a
    no-op. Nickname, avatar, username, and interests are always public.
    """
    sections = {name: dict(fields) for name, fields in profile.get("sections", {}).items()}
    out = {k: v for k, v in profile.items() if k != "sections"}
    if relationship != "owner":
        for group, (section, fieldname) in _GROUP_PATHS.items():
            if not _visible(policy.get(group, "Nobody"), relationship):
                sections.get(section, {}).pop(fieldname, None)
        # The location field group covers the whole location section.
        if not _visible(policy.get("location", "Nobody"), relationship):
            sections.pop("location", None)
    out["sections"] = sections
    return out


def _visible(tier: str, relationship: str) -> bool:
    if relationship == "owner":
        return True
    if tier == "Everyone":
        return True
    if tier == "FriendsOnly":
        return relationship == "friend"
    return False


def location_visible(policy: dict[str, str], relationship: str) -> bool:
    """Whether the owner's position may be shown to this viewer."""
    return _visible(policy.get("location", "Nobody"), relationship)


@dataclass(frozen=True)
class RecommendationScore:
    user_id: str
    username: str
    score: float
    shared_interest_count: int


def jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def score_candidates(
    viewer_interests: set[str],
    viewer_distance_m,
    candidates: list[tuple[str, str, set[str]]],
    k: int,
) -> list[RecommendationScore]:
    """Rank friend candidates by shared interests with distance decay.

    ``viewer_distance_m(user_id)`` returns the distance to a candidate in
    meters, or None when either party has no stored fix (no decay then).
    Zero-score candidates are dropped; ties order by username.
    """
    scored = []
    for user_id, username, interests in candidates:
        base = jaccard(viewer_interests, interests)
        if base == 0.0:
            continue
        d = viewer_distance_m(user_id)
        decay = 1.0 if d is None else math.exp(-d / RECOMMEND_D0_M)
        scored.append(
            RecommendationScore(
                user_id=user_id,
                username=username,
                score=base * decay,
                shared_interest_count=len(viewer_interests & interests),
            )
        )
    scored.sort(key=lambda s: (-s.score, s.username))
    return scored[:k]

"""Robot description parsing and the immutable kinematic/collision model.

The description format is a JSON document with the chain listed in order:
``joints[i]`` connects ``links[i]`` to ``links[i+1]``, ``links[0]`` is the
root. Collision primitives per link are decomposed into spheres at load time;
fixed-transform products (joint origins) are converted to matrix form once so
forward kinematics only composes precomputed transforms.

Schema (lengths in meters, angles in radians)::

    {
      "name": str,
      "joints": [{"name", "kind": "revolute"|"fixed", "axis": [x,y,z],
                  "origin": {"xyz": [..], "rpy": [..]},
                  "limits": {"pos": [lo, hi], "vel": v, "acc": a}}, ...],
      "links":  [{"name", "parent_joint": str|null,
                  "collision": [{"type": "sphere"|"capsule"|"box",
                                 "dims": [...], "pose": {"xyz", "rpy"}}]}, ...],
      "end_effector": str,
      "never_collide": [[link_a, link_b], ...],
      "max_spheres_per_link": int (default 3)
    }

Primitive dims: sphere ``[radius]``; capsule ``[half_length, radius]`` with
the axis along the pose frame's local Z; box ``[dx, dy, dz]`` in the pose
frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Transform, rotation_basis, rpy_matrix

DEFAULT_MAX_SPHERES_PER_LINK = 3


class DescriptionError(ValueError):
    """Invalid robot description; `path` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DescriptionSyntaxError(DescriptionError):
    pass


class DescriptionSemanticError(DescriptionError):
    pass


@dataclass(frozen=True)
class JointSpec:
    name: str
    kind: str  # "revolute" | "fixed"
    axis: np.ndarray | None
    origin: Transform
    pos_limits: tuple[float, float] | None = None
    vel_limit: float | None = None
    acc_limit: float | None = None
    origin_rot_identity: bool = False  # lets FK skip a matrix product
    rot_basis: tuple | None = None  # precomputed Rodrigues basis for the axis


@dataclass(frozen=True)
class CollisionPrimitive:
    kind: str  # "sphere" | "capsule" | "box"
    dims: tuple[float, ...]
    pose: Transform


@dataclass(frozen=True)
class LinkSpec:
    name: str
    parent_joint: str | None
    collision: tuple[CollisionPrimitive, ...] = ()


@dataclass(frozen=True)
class SphereSpec:
    center: np.ndarray  # in link frame
    radius: float
    id: int


@dataclass(frozen=True)
class AllowedCollisionMatrix:
    """Symmetric skip relation over collision-object ids; True means skip."""

    allowed: np.ndarray  # (M, M) bool
    owner: np.ndarray  # (M,) arm index; 0 is the controlled arm

    def is_allowed(self, a: int, b: int) -> bool:
        return bool(self.allowed[a, b])

    @property
    def size(self) -> int:
        return self.allowed.shape[0]


@dataclass(frozen=True)
class RobotModel:
    name: str
    joints: tuple[JointSpec, ...]
    links: tuple[LinkSpec, ...]
    link_spheres: tuple[tuple[SphereSpec, ...], ...]  # aligned with links
    end_effector: str
    never_collide: tuple[tuple[str, str], ...]
    max_spheres_per_link: int
    # Flattened views, precomputed once:
    sphere_centers: np.ndarray = field(repr=False)  # (S, 3) link-frame centers
    sphere_radii: np.ndarray = field(repr=False)  # (S,)
    sphere_link: np.ndarray = field(repr=False)  # (S,) link index per sphere
    q_lower: np.ndarray = field(repr=False)  # (n,)
    q_upper: np.ndarray = field(repr=False)
    vel_limits: np.ndarray = field(repr=False)
    acc_limits: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        """Number of actuated (revolute) joints."""
        return self.q_lower.shape[0]

    @property
    def num_spheres(self) -> int:
        return self.sphere_radii.shape[0]

    @property
    def ee_index(self) -> int:
        return next(i for i, l in enumerate(self.links) if l.name == self.end_effector)

    def link_index(self, name: str) -> int:
        for i, l in enumerate(self.links):
            if l.name == name:
                return i
        raise KeyError(name)

    def center_posture(self) -> np.ndarray:
        return 0.5 * (self.q_lower + self.q_upper)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _get(obj: dict, key: str, path: str, kind=None):
    if key not in obj:
        raise DescriptionSyntaxError(f"missing field '{key}'", path)
    v = obj[key]
    if kind is not None and not isinstance(v, kind):
        raise DescriptionSyntaxError(f"field '{key}' has wrong type", path)
    return v


def _vec3(raw, path: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != 3:
        raise DescriptionSyntaxError("expected a 3-element list", path)
    return np.array([float(x) for x in raw])


def _pose(raw, path: str) -> Transform:
    xyz = _vec3(_get(raw, "xyz", path), f"{path}.xyz") if "xyz" in raw else np.zeros(3)
    rpy = _vec3(_get(raw, "rpy", path), f"{path}.rpy") if "rpy" in raw else np.zeros(3)
    return Transform(rpy_matrix(*rpy), xyz)


def decompose_link_spheres(
    primitives: list[CollisionPrimitive] | tuple[CollisionPrimitive, ...],
    max_per_link: int,
) -> list[SphereSpec]:
    """Decompose a link's collision primitives into bounding spheres.

    Capsules get spheres spaced at most one diameter apart along the axis so
    the medial axis stays covered; when the per-link budget forces wider
    spacing the radius is inflated to keep axis coverage. Boxes use the
    circumscribed radius of the cross-section (half the second-longest
    dimension times sqrt(2)) with end centers inset so the corner points stay
    inside the end spheres. Every surface point of a primitive lies within
    sqrt(2) of its spheres' radius from some center.
    """
    if max_per_link < 1:
        raise ValueError("max_per_link must be >= 1")
    plans = []  # (axis_dir, origin, half_span, radius, wanted_count)
    for prim in primitives:
        if prim.kind == "sphere":
            plans.append((None, prim.pose.t, 0.0, prim.dims[0], 1))
        elif prim.kind == "capsule":
            half, radius = prim.dims
            axis = np.asarray(prim.pose.R) @ np.array([0.0, 0.0, 1.0])
            wanted = 1 if half <= 0 else int(math.ceil(half / radius - 1e-9)) + 1
            plans.append((axis, prim.pose.t, half, radius, wanted))
        elif prim.kind == "box":
            dims = np.asarray(prim.dims, dtype=float)
            order = np.argsort(-dims, kind="stable")
            d1, d2, d3 = dims[order]
            axis = np.asarray(prim.pose.R)[:, order[0]]
            radius = 0.5 * d2 * math.sqrt(2.0)
            corner_sq = 0.25 * (d2 * d2 + d3 * d3)
            inset = math.sqrt(max(radius * radius - corner_sq, 0.0))
            half = max(0.5 * d1 - inset, 0.0)
            if half == 0.0:
                radius = max(radius, math.sqrt(0.25 * d1 * d1 + corner_sq))
                wanted = 1
            else:
                wanted = int(math.ceil(half / radius - 1e-9)) + 1
            plans.append((axis, prim.pose.t, half, radius, wanted))
        else:
            raise ValueError(f"unknown primitive kind '{prim.kind}'")

    counts = [min(p[4], max_per_link) for p in plans]
    # Per-link budget: shrink the largest primitives first until it fits.
    while sum(counts) > max_per_link and max(counts) > 1:
        counts[counts.index(max(counts))] -= 1

    spheres: list[SphereSpec] = []
    for (axis, origin, half, radius, _), k in zip(plans, counts):
        if k == 1 or half == 0.0:
            r = max(radius, half) if axis is not None else radius
            spheres.append(SphereSpec(_freeze(origin), float(r), len(spheres)))
            continue
        spacing = 2.0 * half / (k - 1)
        r = max(radius, 0.5 * spacing)  # inflate so the axis stays covered
        for offset in np.linspace(-half, half, k):
            spheres.append(SphereSpec(_freeze(origin + offset * axis), float(r), len(spheres)))
    return spheres


def parse_robot_description(text: str, max_spheres_per_link: int | None = None) -> RobotModel:
    """Parse a robot description document into an immutable RobotModel."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptionSyntaxError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DescriptionSyntaxError("top level must be an object")

    name = _get(doc, "name", "", str)
    max_per_link = (
        int(doc.get("max_spheres_per_link", DEFAULT_MAX_SPHERES_PER_LINK))
        if max_spheres_per_link is None
        else int(max_spheres_per_link)
    )

    joints: list[JointSpec] = []
    for i, raw in enumerate(_get(doc, "joints", "", list)):
        path = f"joints[{i}]"
        jname = _get(raw, "name", path, str)
        kind = _get(raw, "kind", path, str)
        if kind not in ("revolute", "fixed"):
            raise DescriptionSyntaxError(f"unknown joint kind '{kind}'", path)
        origin = _pose(raw.get("origin", {}), f"{path}.origin")
        rot_id = bool(np.array_equal(np.asarray(origin.R), np.eye(3)))
        if kind == "fixed":
            if "limits" in raw:
                raise DescriptionSemanticError("fixed joints carry no limits", path)
            joints.append(JointSpec(jname, kind, None, origin, origin_rot_identity=rot_id))
            continue
        axis = _vec3(_get(raw, "axis", path), f"{path}.axis")
        norm = float(np.linalg.norm(axis))
        if norm < 1e-12:
            raise DescriptionSemanticError("zero-norm axis", f"{path}.axis")
        if abs(norm - 1.0) > 1e-6:
            raise DescriptionSemanticError("axis must have unit norm", f"{path}.axis")
        limits = _get(raw, "limits", path, dict)
        lo, hi = (float(x) for x in _get(limits, "pos", f"{path}.limits", list))
        if not lo < hi:
            raise DescriptionSemanticError("degenerate limits (q_l >= q_u)", f"{path}.limits.pos")
        vel = float(_get(limits, "vel", f"{path}.limits"))
        acc = float(_get(limits, "acc", f"{path}.limits"))
        if vel <= 0 or acc <= 0:
            raise DescriptionSemanticError("vel/acc limits must be positive", f"{path}.limits")
        unit_axis = _freeze(axis / norm)
        joints.append(
            JointSpec(jname, kind, unit_axis, origin, (lo, hi), vel, acc, rot_id,
                      rotation_basis(unit_axis))
        )

    links: list[LinkSpec] = []
    for i, raw in enumerate(_get(doc, "links", "", list)):
        path = f"links[{i}]"
        lname = _get(raw, "name", path, str)
        parent = raw.get("parent_joint")
        prims = []
        for j, c in enumerate(raw.get("collision", [])):
            cpath = f"{path}.collision[{j}]"
            ckind = _get(c, "type", cpath, str)
            dims = tuple(float(x) for x in _get(c, "dims", cpath, list))
            expected = {"sphere": 1, "capsule": 2, "box": 3}.get(ckind)
            if expected is None:
                raise DescriptionSyntaxError(f"unknown primitive type '{ckind}'", cpath)
            if len(dims) != expected or any(d <= 0 for d in dims):
                raise DescriptionSemanticError("primitive dims must be positive", cpath)
            prims.append(CollisionPrimitive(ckind, dims, _pose(c.get("pose", {}), cpath)))
        links.append(LinkSpec(lname, parent, tuple(prims)))

    _validate_chain(joints, links)

    ee = _get(doc, "end_effector", "", str)
    if ee not in {l.name for l in links}:
        raise DescriptionSemanticError(f"end_effector '{ee}' is not a link", "end_effector")

    never = []
    link_names = {l.name for l in links}
    for i, pair in enumerate(doc.get("never_collide", [])):
        if not isinstance(pair, list) or len(pair) != 2:
            raise DescriptionSyntaxError("expected a pair of link names", f"never_collide[{i}]")
        a, b = str(pair[0]), str(pair[1])
        if a not in link_names or b not in link_names:
            raise DescriptionSemanticError(f"unknown link in pair ({a}, {b})", f"never_collide[{i}]")
        never.append((a, b))

    link_spheres = []
    next_id = 0
    for link in links:
        local = decompose_link_spheres(link.collision, max_per_link)
        relabeled = tuple(
            SphereSpec(s.center, s.radius, next_id + k) for k, s in enumerate(local)
        )
        next_id += len(relabeled)
        link_spheres.append(relabeled)

    flat = [s for per_link in link_spheres for s in per_link]
    centers = _freeze(np.array([s.center for s in flat]).reshape(len(flat), 3))
    radii = _freeze(np.array([s.radius for s in flat]))
    sphere_link = np.array(
        [i for i, per_link in enumerate(link_spheres) for _ in per_link], dtype=int
    )
    sphere_link.setflags(write=False)

    actuated = [j for j in joints if j.kind == "revolute"]
    return RobotModel(
        name=name,
        joints=tuple(joints),
        links=tuple(links),
        link_spheres=tuple(link_spheres),
        end_effector=ee,
        never_collide=tuple(never),
        max_spheres_per_link=max_per_link,
        sphere_centers=centers,
        sphere_radii=radii,
        sphere_link=sphere_link,
        q_lower=_freeze([j.pos_limits[0] for j in actuated]),
        q_upper=_freeze([j.pos_limits[1] for j in actuated]),
        vel_limits=_freeze([j.vel_limit for j in actuated]),
        acc_limits=_freeze([j.acc_limit for j in actuated]),
    )


def _validate_chain(joints: list[JointSpec], links: list[LinkSpec]) -> None:
    if not links:
        raise DescriptionSemanticError("at least one link required", "links")
    if links[0].parent_joint is not None:
        raise DescriptionSemanticError("first link must be the root (no parent)", "links[0]")
    if len(joints) != len(links) - 1:
        raise DescriptionSemanticError(
            f"chain mismatch: {len(joints)} joints cannot connect {len(links)} links", "links"
        )
    names = [j.name for j in joints]
    if len(set(names)) != len(names):
        raise DescriptionSemanticError("duplicate joint names", "joints")
    lnames = [l.name for l in links]
    if len(set(lnames)) != len(lnames):
        raise DescriptionSemanticError("duplicate link names", "links")
    for i, link in enumerate(links[1:], start=1):
        if link.parent_joint != joints[i - 1].name:
            raise DescriptionSemanticError(
                f"link graph is not a single chain: expected parent '{joints[i - 1].name}', "
                f"got '{link.parent_joint}'",
                f"links[{i}]",
            )


def load_robot_model(path, max_spheres_per_link: int | None = None) -> RobotModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_robot_description(fh.read(), max_spheres_per_link)


def refit_spheres(model: RobotModel, max_per_link: int) -> RobotModel:
    """Rebuild the model with a different sphere budget (used by off-line
    collision verification at doubled resolution)."""
    doc_joints = []
    for j in model.joints:
        raw: dict = {"name": j.name, "kind": j.kind}
        raw["origin"] = _pose_to_raw(j.origin)
        if j.kind == "revolute":
            raw["axis"] = list(map(float, j.axis))
            raw["limits"] = {"pos": list(j.pos_limits), "vel": j.vel_limit, "acc": j.acc_limit}
        doc_joints.append(raw)
    doc_links = []
    for l in model.links:
        doc_links.append(
            {
                "name": l.name,
                "parent_joint": l.parent_joint,
                "collision": [
                    {"type": p.kind, "dims": list(p.dims), "pose": _pose_to_raw(p.pose)}
                    for p in l.collision
                ],
            }
        )
    doc = {
        "name": model.name,
        "joints": doc_joints,
        "links": doc_links,
        "end_effector": model.end_effector,
        "never_collide": [list(p) for p in model.never_collide],
        "max_spheres_per_link": max_per_link,
    }
    return parse_robot_description(json.dumps(doc))


def _pose_to_raw(tf: Transform) -> dict:
    R = np.asarray(tf.R)
    # Recover rpy from the matrix (gimbal-safe enough for stored poses).
    pitch = math.asin(max(-1.0, min(1.0, -R[2, 0])))
    if abs(R[2, 0]) < 1.0 - 1e-12:
        roll = math.atan2(R[2, 1], R[2, 2])
        yaw = math.atan2(R[1, 0], R[0, 0])
    else:
        roll = math.atan2(-R[1, 2], R[1, 1])
        yaw = 0.0
    return {"xyz": list(map(float, tf.t)), "rpy": [roll, pitch, yaw]}


def acm_from_owners(
    controlled: RobotModel, owners: np.ndarray, link_idx: np.ndarray
) -> AllowedCollisionMatrix:
    """ACM for a scene snapshot given only per-object owners and link indices.

    Equivalent to `build_acm` without needing the external models: external
    arms contribute no checked pairs among themselves, and the controlled
    block comes from the model's adjacency and never_collide lists.
    """
    owners = np.asarray(owners, dtype=int)
    total = owners.shape[0]
    allowed = np.zeros((total, total), dtype=bool)
    ext = owners > 0
    allowed[np.ix_(ext, ext)] = True
    own = np.flatnonzero(~ext)
    if own.size:
        link_of = np.asarray(link_idx, dtype=int)[own]
        same = link_of[:, None] == link_of[None, :]
        adjacent = np.abs(link_of[:, None] - link_of[None, :]) == 1
        block = same | adjacent
        for a, b in controlled.never_collide:
            ia, ib = controlled.link_index(a), controlled.link_index(b)
            block |= (link_of[:, None] == ia) & (link_of[None, :] == ib)
            block |= (link_of[:, None] == ib) & (link_of[None, :] == ia)
        allowed[np.ix_(own, own)] = block
    np.fill_diagonal(allowed, True)
    allowed.setflags(write=False)
    return AllowedCollisionMatrix(allowed, owners.copy())


def build_acm(controlled: RobotModel, externals: list[RobotModel]) -> AllowedCollisionMatrix:
    """Scene-wide allowed-collision matrix over [controlled | externals] ids.

    A pair is skipped iff both objects belong to external arms, both sit on
    the same or adjacent links of one arm, or the link pair is listed in that
    arm's never_collide set. Every checked pair therefore includes at least
    one controlled-arm object.
    """
    models = [controlled] + list(externals)
    sizes = [m.num_spheres for m in models]
    total = sum(sizes)
    allowed = np.zeros((total, total), dtype=bool)
    owner = np.zeros(total, dtype=int)

    offset = 0
    for arm_idx, m in enumerate(models):
        s = slice(offset, offset + sizes[arm_idx])
        owner[s] = arm_idx
        if arm_idx > 0:
            # External arms are obstacles only; their internal pairs are skipped.
            allowed[s, s] = True
        else:
            link_of = m.sphere_link
            same = link_of[:, None] == link_of[None, :]
            adjacent = np.abs(link_of[:, None] - link_of[None, :]) == 1
            block = same | adjacent
            for a, b in m.never_collide:
                ia, ib = m.link_index(a), m.link_index(b)
                block |= (link_of[:, None] == ia) & (link_of[None, :] == ib)
                block |= (link_of[:, None] == ib) & (link_of[None, :] == ia)
            allowed[s, s] = block
        offset += sizes[arm_idx]

    # Pairs fully outside the controlled arm are never checked.
    ext = owner > 0
    allowed[np.ix_(ext, ext)] = True
    np.fill_diagonal(allowed, True)
    allowed.setflags(write=False)
    owner.setflags(write=False)
    return AllowedCollisionMatrix(allowed, owner)

"""Trajectory programs for the twelve synthetic layout actions.

Each script draws per-video path parameters from an rng stream, emits box
paths over normalized time, and owns a geometric predicate that must hold
on the jittered output (containment, monotone distance, joint translation,
orbit progress, size monotonicity, vertical ordering, position exchange).

Scripts are laid out so their predicates hold under jitter by a safety
margin: worst-case center jitter is +/-j per coordinate, so a relative
center measurement between two objects moves by at most 2*j*sqrt(2) per
frame and roughly twice that between two frames. Strict frame-over-frame
distance monotonicity therefore pairs with a small per-script jitter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..engine.rng import RngStream

ITEM = "item"
CONTAINER = "container"

CATEGORY_NAMES = (ITEM, CONTAINER)


@dataclass(frozen=True)
class ActionScript:
    """A parametrized trajectory program plus its defining predicate."""

    action_id: str
    num_objects: int
    roles: tuple[str, ...]  # category name per object slot
    jitter: float  # per-frame center noise, +/- in normalized units
    min_travel: float  # travel guarantee used by the predicate, if any
    sample_paths: Callable  # (stream, T, sizes[m,2]) -> centers [T, m, 2]
    sample_sizes: Callable  # (stream) -> sizes [m, 2]
    check: Callable  # (boxes [T, m, 4]) -> None | str (violation reason)


def _centers(boxes: np.ndarray) -> np.ndarray:
    return 0.5 * (boxes[..., 0:2] + boxes[..., 2:4])


def _dist(boxes: np.ndarray, i: int, j: int) -> np.ndarray:
    c = _centers(boxes)
    return np.linalg.norm(c[:, i] - c[:, j], axis=-1)


def _sizes_wh(boxes: np.ndarray) -> np.ndarray:
    return boxes[..., 2:4] - boxes[..., 0:2]


def _inside(point: np.ndarray, box: np.ndarray) -> bool:
    return bool(
        box[0] <= point[0] <= box[2] and box[1] <= point[1] <= box[3]
    )


def _overlap(a: np.ndarray, b: np.ndarray) -> bool:
    return not (a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1])


def _item_size(stream: RngStream, prior: float) -> np.ndarray:
    w = prior * (1.0 + 0.3 * stream.uniform())
    h = w * (0.8 + 0.4 * stream.uniform())
    return np.array([w, h])


def _two_item_sizes(prior_a=0.12, prior_b=0.12):
    def fn(stream: RngStream) -> np.ndarray:
        return np.stack(
            [_item_size(stream.child("size0"), prior_a), _item_size(stream.child("size1"), prior_b)]
        )

    return fn


def _container_sizes(stream: RngStream) -> np.ndarray:
    inner = _item_size(stream.child("size0"), 0.10)
    scale = 1.0 + 0.1 * (stream.child("csize").uniform() - 0.5)
    outer = np.array([0.30, 0.26]) * scale
    return np.stack([inner, outer])


def _ts(T: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, T)[:, None]


# -- monotone-distance pair -----------------------------------------------------


def _approach_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    anchor = np.array([0.5, 0.5]) + stream.child("anchor").uniform(-0.02, 0.02, 2)
    theta = stream.child("theta").uniform(0.0, 2.0 * np.pi)
    d = np.array([np.cos(theta), np.sin(theta)])
    r0, r1 = 0.34, 0.05
    t = _ts(T)
    a = anchor + (r0 - (r0 - r1) * t) * d
    b = np.broadcast_to(anchor, (T, 2))
    return np.stack([a, b], axis=1)


def _check_approach(boxes: np.ndarray) -> str | None:
    dist = _dist(boxes, 0, 1)
    if not np.all(np.diff(dist) < 0):
        return "distance not strictly decreasing"
    if dist[0] - dist[-1] < 0.25:
        return "travel below minimum"
    return None


def _move_apart_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    anchor = np.array([0.5, 0.5]) + stream.child("anchor").uniform(-0.03, 0.03, 2)
    theta = stream.child("theta").uniform(0.0, 2.0 * np.pi)
    d = np.array([np.cos(theta), np.sin(theta)])
    r = 0.07 + (0.52 - 0.07) * _ts(T)
    a = anchor + 0.5 * r * d
    b = anchor - 0.5 * r * d
    return np.stack([a, b], axis=1)


def _check_move_apart(boxes: np.ndarray) -> str | None:
    dist = _dist(boxes, 0, 1)
    if not np.all(np.diff(dist) > 0):
        return "distance not strictly increasing"
    if dist[-1] - dist[0] < 0.40:
        return "travel below minimum"
    return None


# -- containment pair ------------------------------------------------------------


def _drop_into_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    cb = np.array(
        [0.5 + stream.child("cx").uniform(-0.1, 0.1), 0.66 + stream.child("cy").uniform(-0.03, 0.03)]
    )
    start = cb + np.array([stream.child("sx").uniform(-0.15, 0.15), -0.45])
    t = _ts(T)
    ease = t * t * (3.0 - 2.0 * t)  # smoothstep: slow release, settles inside
    a = start + (cb - start) * ease
    b = np.broadcast_to(cb, (T, 2))
    return np.stack([a, b], axis=1)


def _check_drop_into(boxes: np.ndarray) -> str | None:
    c = _centers(boxes)
    if _inside(c[0, 0], boxes[0, 1]):
        return "inner object starts inside the container"
    if not _inside(c[-1, 0], boxes[-1, 1]):
        return "inner-object center not inside container at final frame"
    return None


def _take_out_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    cb = np.array(
        [0.5 + stream.child("cx").uniform(-0.1, 0.1), 0.66 + stream.child("cy").uniform(-0.03, 0.03)]
    )
    end = cb + np.array([stream.child("sx").uniform(-0.15, 0.15), -0.45])
    t = _ts(T)
    ease = t * t
    a = cb + (end - cb) * ease
    b = np.broadcast_to(cb, (T, 2))
    return np.stack([a, b], axis=1)


def _check_take_out(boxes: np.ndarray) -> str | None:
    c = _centers(boxes)
    if not _inside(c[0, 0], boxes[0, 1]):
        return "inner object does not start inside the container"
    if _inside(c[-1, 0], boxes[-1, 1]):
        return "inner object still inside container at final frame"
    if np.linalg.norm(c[-1, 0] - c[0, 0]) < 0.2:
        return "object did not move far enough out"
    return None


# -- joint translation pair ---------------------------------------------------------


def _pick_up_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    cx = 0.35 + stream.child("cx").uniform() * 0.3
    y0 = 0.72 + stream.child("y0").uniform(-0.02, 0.02)
    y = y0 - 0.30 * _ts(T)[:, 0]
    offset = np.array([0.0, -0.03])
    b = np.stack([np.full_like(y, cx), y], axis=1)
    a = b + offset
    return np.stack([a, b], axis=1)


def _check_joint_vertical(boxes: np.ndarray, direction: float) -> str | None:
    c = _centers(boxes)
    for t in range(boxes.shape[0]):
        if not _overlap(boxes[t, 0], boxes[t, 1]):
            return f"objects lost overlap at frame {t}"
    rel0 = c[0, 0] - c[0, 1]
    rel_dev = np.linalg.norm((c[:, 0] - c[:, 1]) - rel0, axis=-1)
    if rel_dev.max() > 0.12:
        return "objects did not translate jointly"
    for obj in (0, 1):
        travel = (c[-1, obj, 1] - c[0, obj, 1]) * direction
        if travel < 0.2:
            return "vertical travel below minimum"
    return None


def _check_pick_up(boxes: np.ndarray) -> str | None:
    return _check_joint_vertical(boxes, direction=-1.0)  # up = decreasing y


def _put_down_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    cx = 0.35 + stream.child("cx").uniform() * 0.3
    y0 = 0.38 + stream.child("y0").uniform(-0.02, 0.02)
    y = y0 + 0.30 * _ts(T)[:, 0]
    offset = np.array([0.0, -0.03])
    b = np.stack([np.full_like(y, cx), y], axis=1)
    a = b + offset
    return np.stack([a, b], axis=1)


def _check_put_down(boxes: np.ndarray) -> str | None:
    return _check_joint_vertical(boxes, direction=1.0)


# -- vertical-ordering pair -----------------------------------------------------------


def _pass_paths(above: bool):
    def fn(stream: RngStream, T: int, sizes) -> np.ndarray:
        cyb = 0.5 + stream.child("cyb").uniform(-0.04, 0.04)
        cxb = 0.5 + stream.child("cxb").uniform(-0.05, 0.05)
        gap = 0.26
        cya = cyb - gap if above else cyb + gap
        x = 0.16 + (0.84 - 0.16) * _ts(T)[:, 0]
        if stream.child("dir").uniform() < 0.5:
            x = x[::-1].copy()
        a = np.stack([x, np.full_like(x, cya)], axis=1)
        b = np.broadcast_to(np.array([cxb, cyb]), (T, 2))
        return np.stack([a, b], axis=1)

    return fn


def _check_pass(above: bool):
    def fn(boxes: np.ndarray) -> str | None:
        c = _centers(boxes)
        dy = c[:, 0, 1] - c[:, 1, 1]
        if above and not np.all(dy < 0):
            return "moving object not strictly above at every frame"
        if not above and not np.all(dy > 0):
            return "moving object not strictly below at every frame"
        dx0 = c[0, 0, 0] - c[0, 1, 0]
        dx1 = c[-1, 0, 0] - c[-1, 1, 0]
        if not (abs(dx0) >= 0.2 and abs(dx1) >= 0.2 and np.sign(dx0) != np.sign(dx1)):
            return "moving object did not cross the static one horizontally"
        return None

    return fn


# -- orbit ------------------------------------------------------------------------------


def _circle_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    center = np.array([0.5, 0.5]) + stream.child("anchor").uniform(-0.02, 0.02, 2)
    r = 0.26 + stream.child("r").uniform(-0.02, 0.02)
    theta0 = stream.child("theta").uniform(0.0, 2.0 * np.pi)
    sign = 1.0 if stream.child("spin").uniform() < 0.5 else -1.0
    theta = theta0 + sign * 2.0 * np.pi * _ts(T)[:, 0]
    a = center + r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    b = np.broadcast_to(center, (T, 2))
    return np.stack([a, b], axis=1)


def _check_circle(boxes: np.ndarray) -> str | None:
    c = _centers(boxes)
    rel = c[:, 0] - c[:, 1]
    radius = np.linalg.norm(rel, axis=-1)
    if radius.min() < 0.12 or radius.max() > 0.45:
        return "orbit radius outside band"
    ang = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    progress = abs(ang[-1] - ang[0])
    if progress < 1.75 * np.pi:
        return "angular progress below threshold"
    return None


# -- swap ---------------------------------------------------------------------------------


def _swap_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    anchor = np.array([0.5, 0.5]) + stream.child("anchor").uniform(-0.03, 0.03, 2)
    delta = np.array(
        [0.20 + stream.child("dx").uniform(-0.03, 0.03), 0.15 + stream.child("dy").uniform(-0.03, 0.03)]
    )
    if stream.child("flip").uniform() < 0.5:
        delta[1] = -delta[1]
    p1, p2 = anchor - delta, anchor + delta
    t = _ts(T)
    perp = np.array([-delta[1], delta[0]])
    perp = perp / np.linalg.norm(perp)
    arc = 0.08 * np.sin(np.pi * t)
    a = p1 + (p2 - p1) * t + perp * arc
    b = p2 + (p1 - p2) * t - perp * arc
    return np.stack([a, b], axis=1)


def _check_swap(boxes: np.ndarray) -> str | None:
    c = _centers(boxes)
    if np.linalg.norm(c[0, 0] - c[0, 1]) < 0.3:
        return "objects start too close to swap"
    if np.linalg.norm(c[-1, 0] - c[0, 1]) > 0.06:
        return "first object did not reach the second's start"
    if np.linalg.norm(c[-1, 1] - c[0, 0]) > 0.06:
        return "second object did not reach the first's start"
    return None


# -- size monotonicity pair --------------------------------------------------------------


def _shrink_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    cb = np.array(
        [0.30 + stream.child("bx").uniform(-0.03, 0.03), 0.5 + stream.child("by").uniform(-0.05, 0.05)]
    )
    x = cb[0] + 0.14 + 0.36 * _ts(T)[:, 0]
    a = np.stack([x, np.full_like(x, cb[1])], axis=1)
    b = np.broadcast_to(cb, (T, 2))
    return np.stack([a, b], axis=1)


def _shrink_sizes(stream: RngStream) -> np.ndarray:
    a = _item_size(stream.child("size0"), 0.20)
    b = _item_size(stream.child("size1"), 0.12)
    return np.stack([a, b])


def _check_shrink(boxes: np.ndarray) -> str | None:
    wh = _sizes_wh(boxes)[:, 0]
    area = wh[:, 0] * wh[:, 1]
    if not np.all(np.diff(area) < 0):
        return "area not strictly decreasing"
    if area[-1] > 0.5 * area[0]:
        return "final area above half the initial"
    d = _dist(boxes, 0, 1)
    if d[-1] - d[0] < 0.2:
        return "object did not recede"
    return None


def _grow_paths(stream: RngStream, T: int, sizes) -> np.ndarray:
    cb = np.array(
        [0.30 + stream.child("bx").uniform(-0.03, 0.03), 0.5 + stream.child("by").uniform(-0.05, 0.05)]
    )
    x = cb[0] + 0.50 - 0.36 * _ts(T)[:, 0]
    a = np.stack([x, np.full_like(x, cb[1])], axis=1)
    b = np.broadcast_to(cb, (T, 2))
    return np.stack([a, b], axis=1)


def _grow_sizes(stream: RngStream) -> np.ndarray:
    a = _item_size(stream.child("size0"), 0.10)
    b = _item_size(stream.child("size1"), 0.12)
    return np.stack([a, b])


def _check_grow(boxes: np.ndarray) -> str | None:
    wh = _sizes_wh(boxes)[:, 0]
    area = wh[:, 0] * wh[:, 1]
    if not np.all(np.diff(area) > 0):
        return "area not strictly increasing"
    if area[-1] < 2.0 * area[0]:
        return "final area below twice the initial"
    d = _dist(boxes, 0, 1)
    if d[0] - d[-1] < 0.2:
        return "object did not approach"
    return None


# -- size schedules applied on top of static sizes ---------------------------------------


def _size_schedule(action_id: str, T: int, sizes: np.ndarray) -> np.ndarray:
    """Per-frame [T, m, 2] sizes; only grow/shrink actions animate size."""
    out = np.broadcast_to(sizes, (T,) + sizes.shape).copy()
    t = np.linspace(0.0, 1.0, T)
    if action_id == "shrink-away":
        out[:, 0, :] = sizes[0] * (1.0 - 0.55 * t)[:, None]
    elif action_id == "grow-toward":
        out[:, 0, :] = sizes[0] * (1.0 + 1.3 * t)[:, None]
    return out


ACTION_SCRIPTS: dict[str, ActionScript] = {}


def _register(script: ActionScript) -> None:
    ACTION_SCRIPTS[script.action_id] = script


_register(ActionScript("approach", 2, (ITEM, ITEM), 0.003, 0.25, _approach_paths, _two_item_sizes(), _check_approach))
_register(ActionScript("move-apart", 2, (ITEM, ITEM), 0.004, 0.40, _move_apart_paths, _two_item_sizes(), _check_move_apart))
_register(ActionScript("drop-into", 2, (ITEM, CONTAINER), 0.02, 0.0, _drop_into_paths, _container_sizes, _check_drop_into))
_register(ActionScript("take-out-of", 2, (ITEM, CONTAINER), 0.02, 0.2, _take_out_paths, _container_sizes, _check_take_out))
_register(ActionScript("pick-up", 2, (ITEM, ITEM), 0.02, 0.2, _pick_up_paths, _two_item_sizes(0.12, 0.14), _check_pick_up))
_register(ActionScript("put-down", 2, (ITEM, ITEM), 0.02, 0.2, _put_down_paths, _two_item_sizes(0.12, 0.14), _check_put_down))
_register(ActionScript("pass-over", 2, (ITEM, ITEM), 0.02, 0.0, _pass_paths(True), _two_item_sizes(), _check_pass(True)))
_register(ActionScript("pass-under", 2, (ITEM, ITEM), 0.02, 0.0, _pass_paths(False), _two_item_sizes(), _check_pass(False)))
_register(ActionScript("circle-around", 2, (ITEM, ITEM), 0.006, 0.0, _circle_paths, _two_item_sizes(0.10, 0.12), _check_circle))
_register(ActionScript("swap-positions", 2, (ITEM, ITEM), 0.02, 0.3, _swap_paths, _two_item_sizes(), _check_swap))
_register(ActionScript("shrink-away", 2, (ITEM, ITEM), 0.02, 0.2, _shrink_paths, _shrink_sizes, _check_shrink))
_register(ActionScript("grow-toward", 2, (ITEM, ITEM), 0.02, 0.2, _grow_paths, _grow_sizes, _check_grow))

ACTION_NAMES = tuple(ACTION_SCRIPTS)

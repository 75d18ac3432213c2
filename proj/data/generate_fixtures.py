#!/usr/bin/env python3
"""Regenerates the bundled model and scenario files.

    python3 data/generate_fixtures.py
"""
import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parent
G = [0.0, 0.0, -9.81]

# Foot patch half-extents used by every surface contact fixture.
FOOT_DX = 0.09
FOOT_DY = 0.05


def box_inertia(m, x, y, z):
    return [m * (y * y + z * z) / 12, m * (x * x + z * z) / 12, m * (x * x + y * y) / 12, 0, 0, 0]


def body(name, mass, com, dims):
    return {"name": name, "mass": mass, "com": com, "inertia": box_inertia(mass, *dims)}


def rev(name, parent, child, xyz, axis):
    return {"name": name, "type": "revolute", "parent": parent, "child": child,
            "origin_xyz": xyz, "axis": axis}


THIGH = 0.4
SHIN = 0.4
SOLE = 0.08
HIP_DROP = 0.05


def leg(side, y, bodies, joints, frames, parent="pelvis"):
    s = side
    bodies += [
        body(f"{s}_hip_yaw_link", 0.8, [0, 0, 0], [0.06, 0.06, 0.06]),
        body(f"{s}_hip_roll_link", 0.8, [0, 0, 0], [0.06, 0.06, 0.06]),
        body(f"{s}_thigh", 3.0, [0, 0, -THIGH / 2], [0.08, 0.08, THIGH]),
        body(f"{s}_shin", 2.0, [0, 0, -SHIN / 2], [0.07, 0.07, SHIN]),
        body(f"{s}_ankle_link", 0.4, [0, 0, 0], [0.05, 0.05, 0.05]),
        body(f"{s}_foot", 1.0, [0.02, 0, -SOLE / 2], [0.2, 0.1, SOLE]),
    ]
    joints += [
        rev(f"{s}_hip_yaw", parent, f"{s}_hip_yaw_link", [0, y, -HIP_DROP], [0, 0, 1]),
        rev(f"{s}_hip_roll", f"{s}_hip_yaw_link", f"{s}_hip_roll_link", [0, 0, 0], [1, 0, 0]),
        rev(f"{s}_hip_pitch", f"{s}_hip_roll_link", f"{s}_thigh", [0, 0, 0], [0, 1, 0]),
        rev(f"{s}_knee", f"{s}_thigh", f"{s}_shin", [0, 0, -THIGH], [0, 1, 0]),
        rev(f"{s}_ankle_pitch", f"{s}_shin", f"{s}_ankle_link", [0, 0, -SHIN], [0, 1, 0]),
        rev(f"{s}_ankle_roll", f"{s}_ankle_link", f"{s}_foot", [0, 0, 0], [1, 0, 0]),
    ]
    frames.append({"name": f"{s}_sole", "body": f"{s}_foot", "offset_xyz": [0, 0, -SOLE]})


def arm(side, y, bodies, joints, frames):
    s = side
    bodies += [
        body(f"{s}_shoulder_link", 0.5, [0, 0, 0], [0.05, 0.05, 0.05]),
        body(f"{s}_shoulder_roll_link", 0.5, [0, 0, 0], [0.05, 0.05, 0.05]),
        body(f"{s}_upper_arm", 1.5, [0, 0, -0.125], [0.06, 0.06, 0.25]),
        body(f"{s}_forearm", 1.0, [0, 0, -0.125], [0.05, 0.05, 0.25]),
    ]
    joints += [
        rev(f"{s}_shoulder_pitch", "pelvis", f"{s}_shoulder_link", [0, y, 0.45], [0, 1, 0]),
        rev(f"{s}_shoulder_roll", f"{s}_shoulder_link", f"{s}_shoulder_roll_link", [0, 0, 0], [1, 0, 0]),
        rev(f"{s}_shoulder_yaw", f"{s}_shoulder_roll_link", f"{s}_upper_arm", [0, 0, 0], [0, 0, 1]),
        rev(f"{s}_elbow", f"{s}_upper_arm", f"{s}_forearm", [0, 0, -0.25], [0, 1, 0]),
    ]
    frames.append({"name": f"{s}_hand", "body": f"{s}_forearm", "offset_xyz": [0, 0, -0.25]})


def biped():
    bodies = [body("pelvis", 10.0, [0, 0, 0.05], [0.2, 0.3, 0.15])]
    joints = [{"name": "root", "type": "floating", "child": "pelvis"}]
    frames = [{"name": "pelvis", "body": "pelvis", "offset_xyz": [0, 0, 0]}]
    leg("l", 0.1, bodies, joints, frames)
    leg("r", -0.1, bodies, joints, frames)
    return {"gravity": G, "bodies": bodies, "joints": joints, "frames": frames}


def humanoid():
    bodies = [body("pelvis", 16.0, [0, 0, 0.2], [0.2, 0.34, 0.5])]
    joints = [{"name": "root", "type": "floating", "child": "pelvis"}]
    frames = [{"name": "pelvis", "body": "pelvis", "offset_xyz": [0, 0, 0]},
              {"name": "head", "body": "pelvis", "offset_xyz": [0, 0, 0.6]}]
    leg("l", 0.1, bodies, joints, frames)
    leg("r", -0.1, bodies, joints, frames)
    arm("l", 0.22, bodies, joints, frames)
    arm("r", -0.22, bodies, joints, frames)
    return {"gravity": G, "bodies": bodies, "joints": joints, "frames": frames}


def point_mass():
    return {"gravity": G,
            "bodies": [body("mass", 1.0, [0, 0, 0], [0.1, 0.1, 0.1])],
            "joints": [{"name": "root", "type": "floating", "child": "mass"}],
            "frames": [{"name": "center", "body": "mass"}]}


def revolute_arm():
    tiny = [1e-4, 1e-4, 1e-4, 0, 0, 0]
    return {"gravity": G,
            "bodies": [{"name": "base", "mass": 1.0, "inertia": tiny},
                       {"name": "link", "mass": 1.0, "com": [0.5, 0, 0], "inertia": tiny}],
            "joints": [rev("shoulder", "base", "link", [0, 0, 0], [0, 1, 0])],
            "frames": [{"name": "tip", "body": "link", "offset_xyz": [1, 0, 0]}]}


def double_pendulum():
    tiny = [1e-6, 1e-6, 1e-6, 0, 0, 0]
    return {"gravity": G,
            "bodies": [{"name": "base", "mass": 1.0, "inertia": tiny},
                       {"name": "link1", "mass": 1.0, "com": [1, 0, 0], "inertia": tiny},
                       {"name": "link2", "mass": 1.0, "com": [1, 0, 0], "inertia": tiny}],
            "joints": [rev("joint1", "base", "link1", [0, 0, 0], [0, 1, 0]),
                       rev("joint2", "link1", "link2", [1, 0, 0], [0, 1, 0])],
            "frames": [{"name": "tip", "body": "link2", "offset_xyz": [1, 0, 0]}]}


def coupled_arm():
    inert = box_inertia(1.0, 0.3, 0.04, 0.04)
    return {"gravity": G,
            "bodies": [{"name": "base", "mass": 2.0, "inertia": [0.01, 0.01, 0.01, 0, 0, 0]},
                       {"name": "link1", "mass": 1.0, "com": [0.15, 0, 0], "inertia": inert},
                       {"name": "link2", "mass": 1.0, "com": [0.15, 0, 0], "inertia": inert},
                       {"name": "link3", "mass": 1.0, "com": [0.15, 0, 0], "inertia": inert}],
            "joints": [rev("j1", "base", "link1", [0, 0, 0], [0, 1, 0]),
                       rev("j2", "link1", "link2", [0.3, 0, 0], [0, 1, 0]),
                       rev("j3", "link2", "link3", [0.3, 0, 0], [0, 1, 0])],
            "frames": [{"name": "tool", "body": "link3", "offset_xyz": [0.3, 0, 0]}]}


# ---------------------------------------------------------------------------
# Scenarios

# Half knee angle. Deep enough that a 0.1 m vertical CoM swing keeps the
# knees well away from full extension.
CROUCH = 0.6
BENT = {"l_hip_pitch": -CROUCH, "l_knee": 2 * CROUCH, "l_ankle_pitch": -CROUCH,
        "r_hip_pitch": -CROUCH, "r_knee": 2 * CROUCH, "r_ankle_pitch": -CROUCH}
ARMS = {"l_shoulder_pitch": -0.3, "r_shoulder_pitch": -0.3, "l_shoulder_roll": 0.15,
        "r_shoulder_roll": -0.15, "l_elbow": -1.0, "r_elbow": -1.0}
BASE_Z = HIP_DROP + (THIGH + SHIN) * math.cos(CROUCH) + SOLE


def foot(side, mu=0.6, **extra):
    c = {"frame": f"{side}_sole", "geometry": "surface", "mu": mu, "dx": FOOT_DX, "dy": FOOT_DY}
    c.update(extra)
    return c


def initial(arms=False):
    joints = dict(BENT)
    if arms:
        joints.update(ARMS)
    return {"base_position": [0, 0, BASE_Z], "joints": joints}


def task(name, type_, priority, **kw):
    t = {"name": name, "type": type_, "priority": priority}
    t.update(kw)
    return t


def biped_stand():
    return {"name": "biped_stand", "model": "../models/toy_biped.json",
            "duration": 5.0, "dt": 0.001, "weights": {"q1": 1, "q2": 100},
            "initial": initial(),
            "tasks": [task("CM", "centroidal_momentum", 1),
                      task("JP", "joint_posture", 2, gains={"kp": 20, "kd": 9})],
            "contacts": [foot("l"), foot("r")]}


def biped_hierarchy():
    return {"name": "biped_hierarchy", "model": "../models/toy_biped.json",
            "duration": 1.0, "dt": 0.001,
            "initial": initial(),
            "tasks": [task("CM", "centroidal_momentum", 1,
                           trajectory={"kind": "sinusoid", "amplitude": [0.0, 0.02, 0.0], "frequency": 1.0}),
                      task("pelvis_orientation", "frame_orientation", 2, frame="pelvis"),
                      task("pelvis_position", "frame_position", 3, frame="pelvis"),
                      task("JP", "joint_posture", 4, gains={"kp": 20, "kd": 9})],
            "contacts": [foot("l"), foot("r")]}


def humanoid_tasks(com_traj=None, relaxation_weight=None):
    # Hand references ride along with the CoM reference.
    cm = task("CM", "centroidal_momentum", 1)
    if relaxation_weight:
        cm["relaxation_weight"] = relaxation_weight
    hands = {}
    if com_traj:
        cm["trajectory"] = com_traj
        hands["trajectory"] = com_traj
    return [cm,
            task("RHP", "frame_position", 2, frame="r_hand", **hands),
            task("LHP", "frame_position", 3, frame="l_hand", **hands),
            task("JP", "joint_posture", 4, gains={"kp": 20, "kd": 9})]


def humanoid_sinusoid():
    return {"name": "humanoid_com_sinusoid", "model": "../models/toy_humanoid.json",
            "duration": 10.0, "dt": 0.001, "weights": {"q1": 1, "q2": 100},
            "initial": initial(arms=True),
            # Where the feet cannot supply the full centroidal command, the
            # CoM rows are held and the angular rows give way.
            "tasks": humanoid_tasks({"kind": "sinusoid", "amplitude": [0, 0, 0.1], "frequency": 1.0,
                                   "ramp": 0.5},
                                  relaxation_weight=[10, 10, 10, 1000, 1000, 1000]),
            "contacts": [foot("l"), foot("r")]}


def humanoid_bench():
    s = {"name": "humanoid_bench", "model": "../models/toy_humanoid.json",
         "duration": 1.0, "dt": 0.001, "initial": initial(arms=True),
         "tasks": [task("CM", "centroidal_momentum", 1),
                   task("JP_first", "joint_posture", 1),
                   task("RHP", "frame_position", 2, frame="r_hand"),
                   task("LHP", "frame_position", 3, frame="l_hand"),
                   task("BO", "frame_orientation", 4, frame="pelvis"),
                   task("HO", "frame_orientation", 5, frame="head"),
                   task("JP", "joint_posture", 6, gains={"kp": 20, "kd": 9})],
         "contacts": [foot("l"), foot("r")],
         "task_sets": [{"name": "a", "tasks": ["JP_first"]},
                       {"name": "b", "tasks": ["CM", "JP"]},
                       {"name": "c", "tasks": ["CM", "RHP", "JP"]},
                       {"name": "d", "tasks": ["CM", "RHP", "LHP", "JP"]},
                       {"name": "e", "tasks": ["CM", "RHP", "LHP", "BO", "HO", "JP"]}]}
    return s


def humanoid_sway():
    return {"name": "humanoid_sway", "model": "../models/toy_humanoid.json",
            "duration": 4.0, "dt": 0.001,
            "initial": initial(arms=True),
            "tasks": humanoid_tasks({"kind": "sinusoid", "amplitude": [0.02, 0.04, 0.0],
                                            "frequency": 0.6, "ramp": 0.5}),
            "contacts": [foot("l", mu=0.3), foot("r", mu=0.3)]}


def humanoid_push():
    # A 1 cm quintic shift in 0.05 s peaks near 23 m/s^2, far beyond the
    # mu g = 2.9 m/s^2 friction allows, yet small enough to recover from.
    return {"name": "humanoid_infeasible_push", "model": "../models/toy_humanoid.json",
            "duration": 1.0, "dt": 0.001,
            "initial": initial(arms=True),
            "tasks": [task("CM", "centroidal_momentum", 1, gains={"kp": 100, "kd": 20},
                           trajectory={"kind": "waypoints", "points": [
                               {"t": 0.0, "value": [0, 0, 0]}, {"t": 0.05, "value": [0.01, 0, 0]}]}),
                      task("JP", "joint_posture", 2, gains={"kp": 20, "kd": 9})],
            "contacts": [foot("l", mu=0.3), foot("r", mu=0.3)]}


def biped_stepping(transition=True, steps=4):
    ramp, swing, ds = 0.055, 0.36, 0.01
    shift = 1.0
    lift = 0.04
    # Shift the CoM over the left sole, then step the right foot in place.
    t = shift
    windows = []
    start = 0.0
    points = [{"t": 0.0, "value": [0, 0, 0]}]
    for _ in range(steps):
        release = t + ramp
        touchdown = release + swing
        windows.append({"engage": start, "release": round(release, 6)})
        points += [{"t": round(release, 6), "value": [0, 0, 0]},
                   {"t": round(release + swing / 2, 6), "value": [0, 0, lift]},
                   {"t": round(touchdown, 6), "value": [0, 0, 0]}]
        start = round(touchdown, 6)
        t = touchdown + ramp + ds
    windows.append({"engage": start})
    duration = round(t + 0.3, 3)
    left_x = 0.0
    com_shift = {"kind": "waypoints", "points": [{"t": 0.0, "value": [0, 0, 0]},
                                                  {"t": shift * 0.8, "value": [left_x, 0.085, 0]}]}
    extra = {"transition": ramp, "f_min": 0.0, "f_max": 600.0} if transition else {}
    name = "biped_stepping" if transition else "biped_stepping_no_transition"
    return {"name": name, "model": "../models/toy_biped.json",
            "duration": duration, "dt": 0.001, "weights": {"q1": 1, "q2": 100},
            "initial": initial(),
            # CoM position with body orientation would not span the base once
            # the swing leg is free; momentum control does.
            "tasks": [task("CM", "centroidal_momentum", 1, trajectory=com_shift),
                      task("swing_foot", "frame_position", 2, frame="r_sole",
                           gains={"kp": 400, "kd": 40},
                           trajectory={"kind": "waypoints", "points": points}),
                      task("JP", "joint_posture", 3, gains={"kp": 20, "kd": 9})],
            "contacts": [foot("l", **extra), foot("r", windows=windows, **extra)]}


def hand_first():
    return {"name": "hand_only_first_task", "model": "../models/toy_humanoid.json",
            "duration": 0.1, "dt": 0.001, "initial": initial(arms=True),
            "tasks": [task("RHP", "frame_position", 1, frame="r_hand"),
                      task("JP", "joint_posture", 2)],
            "contacts": [foot("l"), foot("r")]}


def coupled_arm_scenario():
    return {"name": "coupled_arm_reach", "model": "../models/coupled_arm.json",
            "duration": 2.0, "dt": 0.001,
            "initial": {"joints": {"j1": -0.4, "j2": 0.5, "j3": 0.5}},
            "internals": [{"type": "coupled", "joint_a": "j2", "joint_b": "j3", "ratio": 1.0}],
            "tasks": [task("tool", "frame_position", 1, frame="tool",
                           trajectory={"kind": "sinusoid", "amplitude": [0.05, 0, 0.05], "frequency": 0.5}),
                      task("posture", "joint_posture", 2, gains={"kp": 10, "kd": 6})],
            "contacts": []}


def write(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def main():
    models = ROOT / "models"
    write(models / "toy_biped.json", biped())
    write(models / "toy_humanoid.json", humanoid())
    write(models / "point_mass.json", point_mass())
    write(models / "revolute_arm.json", revolute_arm())
    write(models / "double_pendulum.json", double_pendulum())
    write(models / "coupled_arm.json", coupled_arm())

    sc = ROOT / "scenarios"
    write(sc / "biped_stand.json", biped_stand())
    write(sc / "biped_hierarchy.json", biped_hierarchy())
    write(sc / "humanoid_com_sinusoid.json", humanoid_sinusoid())
    write(sc / "humanoid_bench.json", humanoid_bench())
    write(sc / "humanoid_sway.json", humanoid_sway())
    write(sc / "humanoid_infeasible_push.json", humanoid_push())
    write(sc / "biped_stepping.json", biped_stepping(True))
    write(sc / "biped_stepping_no_transition.json", biped_stepping(False))
    write(sc / "coupled_arm_reach.json", coupled_arm_scenario())
    # Kept apart from the bundled set: it is expected to fail.
    write(ROOT / "invalid" / "hand_only_first_task.json", hand_first())


if __name__ == "__main__":
    main()

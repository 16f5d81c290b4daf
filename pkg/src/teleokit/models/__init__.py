"""Built-in robot descriptions used by tests, profiling, and CLI defaults.

Static single-robot files ship as package data; the bimanual rigs are
composed from them so both arms stay in lockstep with the single-arm
geometry. ``resolve(path_or_builtin)`` understands ``builtin:<name>``.
"""

import copy
import importlib.resources as resources

import yaml

from ..errors import ConfigError

_STATIC = ("planar_2link", "arm7", "fourbar_hand")


def builtin_names():
    return list(_STATIC) + ["dual_arm7", "compact_dual"]


def builtin_text(name: str) -> str:
    """YAML description text for a built-in robot."""
    if name in _STATIC:
        return resources.files(__package__).joinpath(f"{name}.yaml").read_text("utf-8")
    if name == "dual_arm7":
        return yaml.safe_dump(_dual_arm7(), sort_keys=False)
    if name == "compact_dual":
        return yaml.safe_dump(_compact_dual(), sort_keys=False)
    raise ConfigError(f"unknown builtin robot {name!r}; have {builtin_names()}")


def resolve(spec: str) -> str:
    """Map 'builtin:<name>' to description text, else read the file path."""
    if spec.startswith("builtin:"):
        return builtin_text(spec.split(":", 1)[1])
    with open(spec, "r", encoding="utf-8") as f:
        return f.read()


def _prefix_arm(doc, prefix, root_offset):
    """Rename one arm's links/joints with a side prefix and mount it on a torso."""
    out_links = []
    for link in doc["links"]:
        link = copy.deepcopy(link)
        link["name"] = prefix + link["name"]
        out_links.append(link)
    out_joints = [
        {
            "name": f"{prefix}mount",
            "type": "fixed",
            "parent": "torso",
            "child": prefix + "base",
            "origin": {"position": list(root_offset)},
        }
    ]
    for joint in doc["joints"]:
        joint = copy.deepcopy(joint)
        joint["name"] = prefix + joint["name"]
        joint["parent"] = prefix + joint["parent"]
        joint["child"] = prefix + joint["child"]
        if "passive" in joint:
            joint["passive"]["source"] = prefix + joint["passive"]["source"]
        out_joints.append(joint)
    return out_links, out_joints


def _dual_arm7():
    """Two 7-DoF arms on a shared torso, 0.44 m shoulder spacing."""
    arm = yaml.safe_load(builtin_text("arm7"))
    left_links, left_joints = _prefix_arm(arm, "L_", (0.0, 0.22, 0.0))
    right_links, right_joints = _prefix_arm(arm, "R_", (0.0, -0.22, 0.0))
    return {
        "links": [{"name": "torso"}] + left_links + right_links,
        "joints": left_joints + right_joints,
    }


def _compact_arm(prefix):
    """Planar 3-DoF arm with tip and elbow spheres, for barrier-style tests."""
    links = [
        {"name": f"{prefix}base"},
        {"name": f"{prefix}s1"},
        {
            "name": f"{prefix}s2",
            "spheres": [{"center": [0.16, 0.0, 0.0], "radius": 0.05}],
        },
        {
            "name": f"{prefix}hand",
            "spheres": [
                {"center": [0.08, 0.0, 0.0], "radius": 0.05},
                {"center": [0.16, 0.0, 0.0], "radius": 0.05},
            ],
        },
    ]
    joints = [
        {
            "name": f"{prefix}j1",
            "type": "revolute",
            "parent": f"{prefix}base",
            "child": f"{prefix}s1",
            "axis": [0, 0, 1],
            "limits": [-3.1, 3.1],
        },
        {
            "name": f"{prefix}j2",
            "type": "revolute",
            "parent": f"{prefix}s1",
            "child": f"{prefix}s2",
            "origin": {"position": [0.20, 0.0, 0.0]},
            "axis": [0, 0, 1],
            "limits": [-3.1, 3.1],
        },
        {
            "name": f"{prefix}j3",
            "type": "revolute",
            "parent": f"{prefix}s2",
            "child": f"{prefix}hand",
            "origin": {"position": [0.20, 0.0, 0.0]},
            "axis": [0, 0, 1],
            "limits": [-3.1, 3.1],
        },
    ]
    return links, joints


def _compact_dual():
    """Two compact planar arms face to face; few sphere pairs, all load-bearing."""
    left_links, left_joints = _compact_arm("L_")
    right_links, right_joints = _compact_arm("R_")
    doc = {
        "links": [{"name": "torso"}] + left_links + right_links,
        "joints": [
            {
                "name": "L_mount",
                "type": "fixed",
                "parent": "torso",
                "child": "L_base",
                "origin": {"position": [0.0, 0.30, 0.0]},
            },
            {
                "name": "R_mount",
                "type": "fixed",
                "parent": "torso",
                "child": "R_base",
                "origin": {
                    "position": [0.0, -0.30, 0.0],
                },
            },
        ]
        + left_joints
        + right_joints,
    }
    return doc

"""Regenerates the synthetic robotic-arm catalog (28 combinators).

Run from this directory: python3 generate.py
"""
import json
import os

I = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
DOWN = [[1, 0, 0], [0, -1, 0], [0, 0, -1]]
# z axis along -x, for side-mounted flanges
SIDE = [[0, 0, -1], [0, 1, 0], [1, 0, 0]]

NODES = [
    "arm", "base", "actuator", "servo", "micro_servo", "standard_servo", "smart_servo",
    "sg90", "mg90s", "mg996r", "ax12", "segment", "link", "bracket", "tool", "tool_flange",
    "gripper", "suction", "pen", "camera", "wrist", "fastener", "screw",
]
EDGES = [
    ["servo", "actuator"], ["micro_servo", "servo"], ["standard_servo", "servo"], ["smart_servo", "servo"],
    ["sg90", "micro_servo"], ["mg90s", "micro_servo"], ["mg996r", "standard_servo"], ["ax12", "smart_servo"],
]


def cp(id, joint, origin, rotation, required=None, provided=None):
    out = {"id": id, "joint": joint, "frame": {"origin": origin, "rotation": rotation}}
    if required is not None:
        out["required"] = required
    if provided is not None:
        out["provided"] = provided
    return out


def component(id, inherent, metadata, points, size):
    return {"id": id, "inherent": inherent, "metadata": metadata, "geometry_ref": f"meshes/{id}.obj",
            "connection_points": points}, size


def build():
    out = []
    for name, r, cost in [("base_small", 40, 900), ("base_medium", 60, 1500), ("base_large", 80, 2400)]:
        out.append(component(name, ["base"], {"cost": cost, "mass": r * 5}, [
            cp("ground", "rigid", [0, 0, 0], I, provided=["arm"]),
            cp("top", "rigid", [0, 0, 30], I, required=["servo"]),
            cp("anchor", "rigid", [r - 10, 0, 0], DOWN, required=["fastener"]),
        ], (2 * r, 2 * r, 30)))
    for name, kind, h, cost in [("sg90", "micro_servo", 25, 250), ("mg90s", "micro_servo", 25, 450),
                                ("mg996r", "standard_servo", 40, 900), ("ax12", "smart_servo", 45, 4500)]:
        out.append(component(name, [name, kind], {"cost": cost, "dof": 1, "mass": h * 2}, [
            cp("flange", "rigid", [0, 0, 0], DOWN, provided=["actuator"]),
            cp("side", "rigid", [-12, 0, h / 2], SIDE, provided=["actuator"]),
            cp("horn", "revolute", [0, 0, h], I, required=["segment"]),
        ], (24, 24, h)))
    for name, length, cost in [("link_50", 50, 300), ("link_100", 100, 400), ("link_150", 150, 500)]:
        out.append(component(name, ["link"], {"cost": cost, "mass": length}, [
            cp("a", "rigid", [0, 0, 0], DOWN, required=["servo"], provided=["segment"]),
            cp("b", "rigid", [0, 0, length], I, required=["servo"], provided=["segment"]),
        ], (20, 20, length)))
    for name, h, cost in [("bracket_u", 30, 150), ("bracket_l", 35, 180), ("bracket_c", 25, 120)]:
        out.append(component(name, ["bracket"], {"cost": cost, "mass": 15}, [
            cp("base", "rigid", [0, 0, 0], DOWN, provided=["segment"]),
            cp("mount", "rigid", [0, 0, h], I, required=["micro_servo"]),
        ], (30, 30, h)))
    for name, h, cost in [("gripper", 60, 1200), ("suction", 40, 800), ("pen", 80, 100), ("camera", 30, 2500)]:
        out.append(component(name, [name, "tool"], {"cost": cost, "mass": h}, [
            cp("flange", "rigid", [0, 0, 0], DOWN, provided=["segment", "tool_flange"]),
        ], (30, 30, h)))
    for name, length, cost in [("screw_m3", 10, 5), ("screw_m4", 12, 7), ("screw_m5", 16, 9)]:
        out.append(component(name, ["screw"], {"cost": cost, "mass": 1}, [
            cp("head", "rigid", [0, 0, length], I, provided=["fastener"]),
        ], (6, 6, length)))
    out.append(component("wrist", ["wrist"], {"cost": 3000, "dof": 2, "mass": 120}, [
        cp("flange", "rigid", [0, 0, 0], DOWN, provided=["segment"]),
        cp("tool", "revolute", [0, 0, 50], I, required=["tool_flange"]),
    ], (40, 40, 50)))
    return out


def box(path, sx, sy, sz):
    hx, hy = sx / 2, sy / 2
    v = [(x, y, z) for z in (0, sz) for y in (-hy, hy) for x in (-hx, hx)]
    faces = [(1, 3, 4, 2), (5, 6, 8, 7), (1, 2, 6, 5), (3, 7, 8, 4), (1, 5, 7, 3), (2, 4, 8, 6)]
    with open(path, "w") as fh:
        for p in v:
            fh.write("v %g %g %g\n" % p)
        for f in faces:
            fh.write("f %d %d %d %d\n" % f)


def main():
    for d in ("taxonomies", "components", "meshes"):
        os.makedirs(d, exist_ok=True)
    with open("taxonomies/arm.json", "w") as fh:
        json.dump({"name": "arm", "nodes": sorted(NODES), "edges": EDGES}, fh, indent=2)
        fh.write("\n")
    for spec, size in build():
        with open(f"components/{spec['id']}.json", "w") as fh:
            json.dump(spec, fh, indent=2)
            fh.write("\n")
        box(f"meshes/{spec['id']}.obj", *size)


if __name__ == "__main__":
    main()

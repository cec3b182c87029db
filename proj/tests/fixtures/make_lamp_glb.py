#!/usr/bin/env python3
"""Builds the lamp.glb fixture: three box primitives under nested nodes.

Prints the expected world-space union AABB, computed here with plain
numpy (independent of the C++ loader), for freezing into tests.
"""
import json
import struct

import numpy as np


def box_mesh(sx, sy, sz):
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    verts = np.array(
        [
            [-hx, -hy, -hz], [hx, -hy, -hz], [-hx, hy, -hz], [hx, hy, -hz],
            [-hx, -hy, hz], [hx, -hy, hz], [-hx, hy, hz], [hx, hy, hz],
        ],
        dtype=np.float32,
    )
    quads = [
        (0, 4, 6, 2), (1, 3, 7, 5), (0, 1, 5, 4),
        (2, 6, 7, 3), (0, 2, 3, 1), (4, 5, 7, 6),
    ]
    tris = []
    for a, b, c, d in quads:
        tris += [(a, b, c), (a, c, d)]
    return verts, np.array(tris, dtype=np.uint16).reshape(-1)


def trs_matrix(t=(0, 0, 0), r=(0, 0, 0, 1), s=(1, 1, 1)):
    x, y, z, w = r
    rot = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
    m = np.eye(4)
    m[:3, :3] = rot @ np.diag(s)
    m[:3, 3] = t
    return m


def main():
    yrot45 = (0.0, np.sin(np.pi / 8), 0.0, np.cos(np.pi / 8))  # 45 deg about y

    meshes = [box_mesh(0.8, 0.1, 0.8), box_mesh(1.0, 1.0, 1.0), box_mesh(0.5, 0.2, 0.5)]
    nodes = [
        {"name": "base", "mesh": 0, "translation": [0.0, -0.5, 0.0]},
        {"name": "rig", "translation": [0.1, 0.0, 0.0], "children": [2, 3]},
        {"name": "pole", "mesh": 1, "translation": [0.0, 0.2, 0.0], "scale": [0.05, 0.7, 0.05]},
        {"name": "shade", "mesh": 2, "translation": [0.0, 0.6, 0.0],
         "rotation": [yrot45[0], yrot45[1], yrot45[2], yrot45[3]]},
    ]

    worlds = {
        0: trs_matrix(t=(0.0, -0.5, 0.0)),
        2: trs_matrix(t=(0.1, 0.0, 0.0)) @ trs_matrix(t=(0.0, 0.2, 0.0), s=(0.05, 0.7, 0.05)),
        3: trs_matrix(t=(0.1, 0.0, 0.0)) @ trs_matrix(t=(0.0, 0.6, 0.0), r=yrot45),
    }

    # Independent oracle: baked world-space AABB over all primitives.
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for node_index, mesh_index in ((0, 0), (2, 1), (3, 2)):
        verts = meshes[mesh_index][0].astype(np.float64)
        m = worlds[node_index]
        world = (m[:3, :3] @ verts.T).T + m[:3, 3]
        lo = np.minimum(lo, world.min(axis=0))
        hi = np.maximum(hi, world.max(axis=0))
    print("union AABB min:", ", ".join(f"{v:.12f}" for v in lo))
    print("union AABB max:", ", ".join(f"{v:.12f}" for v in hi))

    bin_parts = []
    buffer_views = []
    accessors = []
    gltf_meshes = []
    offset = 0
    for verts, indices in meshes:
        vbytes = verts.tobytes()
        buffer_views.append({"buffer": 0, "byteOffset": offset, "byteLength": len(vbytes)})
        accessors.append(
            {
                "bufferView": len(buffer_views) - 1,
                "componentType": 5126,
                "count": len(verts),
                "type": "VEC3",
                "min": verts.min(axis=0).tolist(),
                "max": verts.max(axis=0).tolist(),
            }
        )
        bin_parts.append(vbytes)
        offset += len(vbytes)

        ibytes = indices.tobytes()
        pad = (4 - len(ibytes) % 4) % 4
        ibytes += b"\x00" * pad
        buffer_views.append({"buffer": 0, "byteOffset": offset, "byteLength": len(indices) * 2})
        accessors.append(
            {
                "bufferView": len(buffer_views) - 1,
                "componentType": 5123,
                "count": int(len(indices)),
                "type": "SCALAR",
            }
        )
        bin_parts.append(ibytes)
        offset += len(ibytes)

        gltf_meshes.append(
            {
                "primitives": [
                    {
                        "attributes": {"POSITION": len(accessors) - 2},
                        "indices": len(accessors) - 1,
                        "mode": 4,
                    }
                ]
            }
        )

    bin_chunk = b"".join(bin_parts)
    doc = {
        "asset": {"version": "2.0"},
        "scene": 0,
        "scenes": [{"nodes": [0, 1]}],
        "nodes": nodes,
        "meshes": gltf_meshes,
        "buffers": [{"byteLength": len(bin_chunk)}],
        "bufferViews": buffer_views,
        "accessors": accessors,
    }

    json_chunk = json.dumps(doc, separators=(",", ":")).encode()
    json_chunk += b" " * ((4 - len(json_chunk) % 4) % 4)
    bin_chunk += b"\x00" * ((4 - len(bin_chunk) % 4) % 4)

    total = 12 + 8 + len(json_chunk) + 8 + len(bin_chunk)
    with open("lamp.glb", "wb") as f:
        f.write(struct.pack("<III", 0x46546C67, 2, total))
        f.write(struct.pack("<II", len(json_chunk), 0x4E4F534A))
        f.write(json_chunk)
        f.write(struct.pack("<II", len(bin_chunk), 0x004E4942))
        f.write(bin_chunk)
    print("wrote lamp.glb,", total, "bytes")


if __name__ == "__main__":
    main()

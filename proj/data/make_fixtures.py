"""Regenerates the subtype-count datasets, the mini benchmark and its figures."""
import json
import struct
import zlib
from pathlib import Path

HERE = Path(__file__).resolve().parent

GEOMETRY = [("Angle", 193), ("Length", 158), ("Area", 47), ("Applied", 69), ("Analytic", 41)]
FUNCTION = [("Property", 71), ("Expression", 32), ("Coordinate", 16), ("Applied", 40)]
SOURCES = ["GeoQA", "Geometry3K", "GEOS"]

GEOMETRY_TEXT = {
    "Angle": "In triangle ABC, angle A = {a} degrees and angle B = {b} degrees. Find angle C.",
    "Length": "A right triangle has legs {a} and {b}. Find the length of the hypotenuse.",
    "Area": "A rectangle has sides {a} and {b}. Find its area.",
    "Applied": "A ladder of length {a} m leans against a wall with its foot {b} m from the wall. How high does it reach?",
    "Analytic": "Points P({a}, 0) and Q(0, {b}) are given. Find the distance PQ.",
}
FUNCTION_TEXT = {
    "Property": "For y = x^2 - {a}x + {b}, find the vertex of the parabola.",
    "Expression": "A line passes through (0, {a}) and ({b}, 0). Find its equation.",
    "Coordinate": "Find where y = {a}x - {b} crosses the x-axis.",
    "Applied": "A ball follows h(t) = -5t^2 + {a}t + {b}. When does it reach its highest point?",
}


def write_subtypes(path, category, table, texts):
    lines = []
    for subtype, count in table:
        for i in range(count):
            a, b = 20 + (7 * i) % 60, 10 + (11 * i) % 50
            lines.append(json.dumps({
                "id": f"{category.lower()}-{subtype.lower()}-{i + 1:03d}",
                "category": category,
                "subtype": subtype,
                "text": texts[subtype].format(a=a, b=b),
                "source": SOURCES[i % 3],
            }))
    path.write_text("\n".join(lines) + "\n")


def png(width, height, seed):
    rows = b"".join(
        b"\x00" + bytes(255 if (x // 4 + y // 4 + seed) % 2 else 64 for x in range(width)) for y in range(height))

    def chunk(kind, data):
        return struct.pack(">I", len(data)) + kind + data + struct.pack(">I", zlib.crc32(kind + data) & 0xFFFFFFFF)

    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(rows, 9)) + chunk(b"IEND", b""))


MINI = [
    ("mb-geo-angle", "Geometry2D", "Angle",
     "In right triangle ABC the right angle is at A, AB = 4 and AC = 3. Find the measure of angle B to the nearest degree.",
     "37", ["30", "37", "45", "53"]),
    ("mb-geo-length", "Geometry2D", "Length",
     "In right triangle ABC with the right angle at A, AB = 4 and AC = 3. Find BC.", "5", None),
    ("mb-geo-area-fault", "Geometry2D", "Area",
     "Triangle ABC has vertices A(0, 0), B(4, 0) and C(0, 3). Find its area.", "6", ["5", "6", "7", "12"]),
    ("mb-fn-property", "Function", "Property",
     "Find the vertex of the parabola y = x^2 - 1.", "(0, -1)", None),
    ("mb-fn-expression", "Function", "Expression",
     "A parabola opens upward, has its vertex at (0, -1) and passes through (1, 0). Find its equation.", "y = x^2 - 1",
     None),
    ("mb-fn-coordinate", "Function", "Coordinate",
     "Find the points where y = x^2 - 1 meets the x-axis.", "(-1, 0) and (1, 0)", None),
]

PROTOCOL = {
    "clean": ("proto-clean", "In right triangle ABC with the right angle at A, AB = 4 and AC = 3. Find BC."),
    "fault": ("proto-fault", "In right triangle ABC with the right angle at A, AB = 4 and AC = 3. Find BC."),
    "exhaust": ("proto-exhaust", "In right triangle ABC with the right angle at A, AB = 4 and AC = 3. Find BC."),
}


def main():
    write_subtypes(HERE / "geometry2d_subtypes.jsonl", "Geometry2D", GEOMETRY, GEOMETRY_TEXT)
    write_subtypes(HERE / "function_subtypes.jsonl", "Function", FUNCTION, FUNCTION_TEXT)
    (HERE / "figures").mkdir(exist_ok=True)
    lines = []
    for n, (pid, category, subtype, text, answer, choices) in enumerate(MINI):
        (HERE / "figures" / f"{pid}.png").write_bytes(png(48, 48, n))
        rec = {"id": pid, "category": category, "subtype": subtype, "text": text,
               "image": f"figures/{pid}.png", "answer": answer}
        if choices:
            rec["choices"] = choices
        lines.append(json.dumps(rec))
    (HERE / "mini_benchmark.jsonl").write_text("\n".join(lines) + "\n")
    (HERE / "protocol").mkdir(exist_ok=True)
    for name, (pid, text) in PROTOCOL.items():
        rec = {"id": pid, "category": "Geometry2D", "subtype": "Length", "text": text, "answer": "5"}
        (HERE / "protocol" / f"{name}.json").write_text(json.dumps(rec, indent=2) + "\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerate the shipped fixture under src/railprox/data/fixture/.

The first 20 case rows are the labelled sample tables from the NBC5 case
list; the rest are synthetic. Community cases are placed along the north
shore corridor and travel cases in the north-west and west suburbs, so the
fixture has a known answer. Station coordinates are approximate.

Usage:
  python scripts/make_fixture.py [--seed 2020]
"""

import argparse
import csv
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "railprox" / "data" / "fixture"

TABLE_ROWS = [
    (128, "2/29/2020", "Cook", "Unknown", "travel", "spouse of woman who also tested positive. likely exposed from travel to another state that had community transmission. released from northwest community hospital to home isolation."),
    (130, "3/5/2020", "Cook", "Chicago", "travel", "acquired virus on the grand princess cruise ship (where several other passengers also tested positive); employed as a special education aide at vaughn occupational high school in chicago"),
    (135, "3/9/2020", "Cook", "Chicago", "travel", "california resident who traveled to illinois"),
    (136, "3/9/2020", "Cook", "Chicago", "travel", "returned earlier in march from an egyptian cruise which had been linked to other cases"),
    (139, "3/15/2020", "Sangamon", "Springfield", "travel", "florida resident who'd traveled to springfield. she was the first confirmed coronavirus case in the county. she died on march 19, 2020."),
    (142, "1/24/2020", "Cook", "Chicago", "travel", "returned from wuhan, china in mid-january; discharged from st. alexius medical center in hoffman estates in early february; finished recovery at home"),
    (143, "1/30/2020", "Cook", "Chicago", "travel", "spouse of woman, who had also tested positive, who had returned from wuhan, china in mid-january; discharged from st. alexius medical center in hoffman estates in early february; completed recovery at home. first recorded human-to-human transmission in the u.s."),
    (144, "3/5/2020", "Cook", "Unknown", "travel", "vanderbilt university student from the chicago area, who flew into o'hare in early march, after traveling to italy"),
    (147, "3/15/2020", "Champaign", "Unknown", "travel", "was in contact with someone who had traveled to italy. as of 3/15: at home in isolation and recovering well. no association with u of i"),
    (149, "3/19/2020", "Jackson", "Unknown", "travel", "possibly exposed to the virus during travel to another state. as of 3/19: at home and insolation. first reported case in jackson county"),
    (145, "3/10/2020", "McHenry", "Unknown", "community", "now released from isolation. no known history of travel to an affected area; no connection to a known case of covid-19."),
    (146, "3/12/2020", "McHenry", "Unknown", "community", "now released from isolation."),
    (148, "3/18/2020", "Cook", "Oak Park", "community", "first diagnosed case in oak park. as of 3/18: at home, in isolation"),
    (150, "3/19/2020", "LaSalle", "Unknown", "community", "no history of travel or contact with an existing case. as of 3/19: recovering at home in isolation. first confirmed case in lasalle county"),
    (151, "3/18/2020", "Peoria", "Unknown", "community", "as of 3/17: at home and in isolation"),
    (152, "3/18/2020", "Peoria", "Unknown", "community", "as of 3/17: at home and in isolation"),
    (153, "3/18/2020", "Will", "Joliet", "community", "student at joliet junior college. as of 3/18, was released from a hospital in cook county"),
    (154, "3/19/2020", "St Joseph", "Unknown", "community", "had exposure history to a known covid-19. as of 3/19: observing self-isolation as instructed"),
    (155, "3/18/2020", "St. Joseph", "Unknown", "community", "as of 3/18: has not required hospitalization; observing self-isolation"),
    (156, "3/15/2020", "Clinton", "Unknown", "community", "non-resident staying in clinton county; no known international travel. as of 3/18: self-quarantined; seems to be doing well"),
]

# canonical_name, aliases, kind, county, lat, lon
GAZETTEER = [
    ("Chicago", "", "city", "Cook", 41.8781, -87.6298),
    ("Oak Park", "", "city", "Cook", 41.8850, -87.7845),
    ("Evanston", "", "city", "Cook", 42.0451, -87.6877),
    ("Skokie", "", "city", "Cook", 42.0324, -87.7416),
    ("Wilmette", "", "city", "Cook", 42.0722, -87.7228),
    ("Winnetka", "", "city", "Cook", 42.1081, -87.7359),
    ("Glencoe", "", "city", "Cook", 42.1350, -87.7581),
    ("Glenview", "", "city", "Cook", 42.0698, -87.7878),
    ("Northbrook", "", "city", "Cook", 42.1275, -87.8290),
    ("Morton Grove", "", "city", "Cook", 42.0406, -87.7826),
    ("Arlington Heights", "", "city", "Cook", 42.0884, -87.9806),
    ("Des Plaines", "", "city", "Cook", 42.0334, -87.8834),
    ("Park Ridge", "", "city", "Cook", 42.0111, -87.8406),
    ("Palatine", "", "city", "Cook", 42.1103, -88.0340),
    ("Schaumburg", "", "city", "Cook", 42.0334, -88.0834),
    ("Hoffman Estates", "", "city", "Cook", 42.0428, -88.0798),
    ("Highland Park", "", "city", "Lake", 42.1817, -87.8003),
    ("Deerfield", "", "city", "Lake", 42.1711, -87.8445),
    ("Lake Forest", "", "city", "Lake", 42.2586, -87.8407),
    ("Libertyville", "", "city", "Lake", 42.2831, -87.9531),
    ("Waukegan", "", "city", "Lake", 42.3636, -87.8448),
    ("Naperville", "", "city", "DuPage", 41.7508, -88.1535),
    ("Hinsdale", "", "city", "DuPage", 41.8009, -87.9370),
    ("Elmhurst", "", "city", "DuPage", 41.8995, -87.9403),
    ("Willowbrook", "", "city", "DuPage", 41.7698, -87.9359),
    ("Aurora", "", "city", "Kane", 41.7606, -88.3201),
    ("Joliet", "", "city", "Will", 41.5250, -88.0817),
    ("Springfield", "", "city", "Sangamon", 39.7817, -89.6501),
    ("Willowbrook Nursing Center", "willowbrook nursing center;chateau nursing and rehabilitation center", "facility", "DuPage", 41.7644, -87.9418),
    ("Vaughn Occupational High School", "", "facility", "Cook", 41.9380, -87.8010),
    ("St. Alexius Medical Center", "st alexius", "facility", "Cook", 42.0526, -88.1400),
    ("Joliet Junior College", "", "facility", "Will", 41.5080, -88.1540),
    ("Northwestern Memorial Hospital", "northwestern memorial", "facility", "Cook", 41.8955, -87.6211),
    ("Evanston Hospital", "", "facility", "Cook", 42.0650, -87.6830),
    ("Glenbrook Hospital", "", "facility", "Cook", 42.0940, -87.8530),
    ("Highland Park Hospital", "", "facility", "Lake", 42.1900, -87.7880),
    ("Northwestern University", "", "landmark", "Cook", 42.0565, -87.6753),
    ("Loyola University", "loyola", "landmark", "Cook", 41.9990, -87.6580),
    ("O'Hare International Airport", "o'hare;ohare", "landmark", "Cook", 41.9786, -87.9048),
    ("Cook County", "", "county", "Cook", 41.8400, -87.8200),
    ("DuPage County", "", "county", "DuPage", 41.8500, -88.0900),
    ("Lake County", "", "county", "Lake", 42.3300, -87.9900),
    ("McHenry County", "", "county", "McHenry", 42.3200, -88.4500),
    ("Will County", "", "county", "Will", 41.4500, -87.9800),
    ("Kane County", "", "county", "Kane", 41.9400, -88.4300),
    ("Sangamon County", "", "county", "Sangamon", 39.7600, -89.6600),
    ("Champaign County", "", "county", "Champaign", 40.1400, -88.2000),
    ("Jackson County", "", "county", "Jackson", 37.7900, -89.3800),
    ("LaSalle County", "", "county", "LaSalle", 41.3400, -88.8900),
    ("Peoria County", "", "county", "Peoria", 40.7900, -89.7600),
    ("St. Joseph County", "", "county", "St Joseph", 41.6200, -86.2900),
    ("Clinton County", "", "county", "Clinton", 38.6100, -89.4200),
]

RAILS = {
    "UP-N": [(41.8827, -87.6403), (41.9166, -87.6685), (41.9682, -87.6741), (42.0090, -87.6690),
             (42.0466, -87.6837), (42.0770, -87.7090), (42.1055, -87.7325), (42.1350, -87.7580),
             (42.1854, -87.7980), (42.2520, -87.8410), (42.3640, -87.8290)],
    "MD-N": [(41.8786, -87.6396), (41.8890, -87.6874), (41.9480, -87.7400), (41.9975, -87.7630),
             (42.0400, -87.7820), (42.0746, -87.8055), (42.1280, -87.8290), (42.1680, -87.8470),
             (42.2340, -87.8700), (42.2880, -87.9540), (42.3440, -88.0400), (42.3970, -88.1830)],
    "UP-NW": [(41.8827, -87.6403), (41.9710, -87.7620), (42.0100, -87.8310), (42.0410, -87.8830),
              (42.0840, -87.9830), (42.1130, -88.0480), (42.1530, -88.1310), (42.2420, -88.3170)],
    "BNSF": [(41.8786, -87.6396), (41.8450, -87.7450), (41.8300, -87.7920), (41.8150, -87.8700),
             (41.8010, -87.9280), (41.7950, -88.0110), (41.7960, -88.0750), (41.7800, -88.1460),
             (41.7610, -88.3080)],
}

COMMUNITY_CITIES = [("Evanston", "Cook"), ("Wilmette", "Cook"), ("Winnetka", "Cook"),
                    ("Glencoe", "Cook"), ("Glenview", "Cook"), ("Northbrook", "Cook"),
                    ("Morton Grove", "Cook"), ("Highland Park", "Lake"), ("Deerfield", "Lake"),
                    ("Lake Forest", "Lake"), ("Chicago", "Cook")]
COMMUNITY_FACILITIES = [("evanston hospital", "Cook", "Evanston"),
                        ("glenbrook hospital", "Cook", "Glenview"),
                        ("highland park hospital", "Lake", "Highland Park"),
                        ("northwestern university", "Cook", "Evanston"),
                        ("loyola university", "Cook", "Chicago"),
                        ("northwestern memorial hospital", "Cook", "Chicago")]
TRAVEL_CITIES = [("Arlington Heights", "Cook"), ("Palatine", "Cook"), ("Schaumburg", "Cook"),
                 ("Hoffman Estates", "Cook"), ("Des Plaines", "Cook"), ("Park Ridge", "Cook"),
                 ("Naperville", "DuPage"), ("Elmhurst", "DuPage"), ("Hinsdale", "DuPage"),
                 ("Aurora", "Kane"), ("Oak Park", "Cook"), ("Chicago", "Cook")]
DESTINATIONS = ["italy", "spain", "new york", "california", "egypt", "china", "france",
                "seattle", "florida", "colorado"]


def community_history(rng, day, place):
    return rng.choice([
        f"first diagnosed case in {place.lower()}. as of 3/{day}: at home, in isolation",
        f"no history of travel or contact with an existing case. as of 3/{day}: recovering at home in isolation",
        f"as of 3/{day}: at home and in isolation",
        f"commutes downtown daily by train. as of 3/{day}: hospitalized in stable condition",
        f"household contact of a known case in {place.lower()}. as of 3/{day}: self-quarantined",
    ])


def travel_history(rng, day):
    dest = rng.choice(DESTINATIONS)
    return rng.choice([
        f"returned from {dest} in early march; as of 3/{day}: at home in isolation",
        f"traveled to {dest} in february. as of 3/{day}: recovering at home",
        "returned earlier in march from a caribbean cruise; self-isolating at home",
        f"flew into o'hare from {dest}; as of 3/{day}: in isolation",
        f"household contact of a traveler who had returned from {dest}",
    ])


def synthetic_rows(rng):
    rows = []
    next_id = iter(range(1001, 2000))

    def add(county, city, label, history):
        rows.append((next(next_id), f"3/{rng.randint(1, 20)}/2020", county, city, label, history))

    for _ in range(44):
        city, county = rng.choice(COMMUNITY_CITIES)
        add(county, city, "community", community_history(rng, rng.randint(5, 20), city))
    for _ in range(22):
        fac, county, city = rng.choice(COMMUNITY_FACILITIES)
        day = rng.randint(5, 20)
        text = rng.choice([f"works at {fac}. no known history of travel. as of 3/{day}: recovering at home",
                           f"staff member at {fac}; as of 3/{day}: self-quarantined",
                           f"employed at {fac}, commutes by metra. as of 3/{day}: in isolation"])
        add(county, city if rng.random() < 0.6 else "Unknown", "community", text)
    for _ in range(16):
        day = rng.randint(12, 20)
        text = rng.choice([f"resident of willowbrook nursing center. as of 3/{day}: hospitalized",
                           f"staff member at willowbrook nursing center; as of 3/{day}: in isolation"])
        add("DuPage", "Willowbrook", "community", text)
    for _ in range(6):
        add("Cook", "Unknown", "community",
            community_history(rng, rng.randint(5, 20), "the area"))
    for _ in range(3):
        add("McHenry", "Unknown", "community", f"as of 3/{rng.randint(5, 20)}: at home and in isolation")
    for _ in range(48):
        city, county = rng.choice(TRAVEL_CITIES)
        add(county, city if rng.random() < 0.85 else "Unknown", "travel",
            travel_history(rng, rng.randint(5, 20)))
    for _ in range(9):
        county = rng.choice(["Cook", "DuPage", "Lake"])
        add(county, "Unknown", "dropped", "no details reported by public health officials or in news stories")
    rng.shuffle(rows)
    return rows


def write_cases(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "data_announced", "COUNTY", "CITY", "histroy_result", "histroy"])
        for row in rows:
            w.writerow(row)


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seed", type=int, default=2020)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    OUT.mkdir(parents=True, exist_ok=True)

    write_cases(TABLE_ROWS, OUT / "table_rows.csv")
    synth = synthetic_rows(rng)
    broken = [(1998, "March 3, 2020", "Cook", "Chicago", "community", "as of 3/3: at home"),
              (1999, "3/4/2020", "", "Unknown", "community", "as of 3/4: at home")]
    write_cases(list(TABLE_ROWS) + synth + broken, OUT / "cases.csv")

    with open(OUT / "gazetteer.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["canonical_name", "aliases", "kind", "county", "lat", "lon"])
        w.writerows(GAZETTEER)

    features = [{"type": "Feature",
                 "properties": {"line_id": line_id, "name": f"Metra {line_id}"},
                 "geometry": {"type": "LineString",
                              "coordinates": [[lon, lat] for lat, lon in pts]}}
                for line_id, pts in RAILS.items()]
    (OUT / "rails.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": features}, indent=1) + "\n",
        encoding="utf-8")

    with open(OUT / "shapes.txt", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["shape_id", "shape_pt_lat", "shape_pt_lon", "shape_pt_sequence"])
        for line_id, pts in RAILS.items():
            for seq, (lat, lon) in enumerate(pts, start=1):
                w.writerow([line_id, lat, lon, seq])
    print(f"wrote fixture to {OUT} ({len(TABLE_ROWS) + len(synth) + len(broken)} case rows)")


if __name__ == "__main__":
    main()

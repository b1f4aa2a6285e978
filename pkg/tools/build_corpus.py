#!/usr/bin/env python3
"""Author the bundled sample corpus and its count manifest.

Deliberately self-contained: no imports from the installed package, so the
manifest counts come from an independent pass over the written file text
rather than from the parser under test. Run from the repository root:

    python3 tools/build_corpus.py
"""

import json
import re
import sys
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "rescuegraph" / "data"

# Node key order matches the canonical serializer so the file diffs cleanly
# against a round-tripped copy.
_NODE_KEYS = ("id", "name", "kind", "bpr", "saa", "d_type", "value",
              "min", "max", "unit", "range_branch")


def node(id, name, kind, **props):
    raw = {"id": id, "name": name, "kind": kind, **props}
    unknown = set(raw) - set(_NODE_KEYS)
    if unknown:
        raise SystemExit(f"bad node property {unknown} on {id}")
    return {k: raw[k] for k in _NODE_KEYS if k in raw and raw[k] is not None}


def edge(frm, to, kind, rank=None):
    out = {"from": frm, "to": to, "kind": kind}
    if rank is not None:
        out["rank"] = rank
    return out


def r(frm, to, rank):
    return edge(frm, to, "R", rank)


NODES = [
    # entry, termination, navigation
    node("start", "Start der Versorgung", "start"),
    node("stop_behandlung", "Ende: Versorgung vor Ort abgeschlossen", "stop"),
    node("stop_uebergabe", "Ende: Übergabe an die Notaufnahme", "stop"),
    node("stop_saa", "Ende: Maßnahme abgeschlossen", "stop"),
    node("hub_bpr", "Übersicht aller Behandlungspfade", "jumpBpr"),
    node("hub_saa", "Übersicht aller Standardarbeitsanweisungen", "jumpSaa"),
    node("hub_dg", "Übersicht der Krankheitsgruppen", "jumpDiseaseGroup"),

    # disease groups with their path choosers
    node("dg_metabolisch", "Krankheitsgruppe Stoffwechsel", "diseaseGroup"),
    node("dg_kardiopulmonal", "Krankheitsgruppe Herz-Kreislauf und Atmung",
         "diseaseGroup"),
    node("dg_metabolisch_wahl", "Pfadwahl Stoffwechsel", "decisionOR",
         bpr="einstieg"),
    node("dg_kardiopulmonal_wahl", "Pfadwahl Herz-Kreislauf und Atmung",
         "decisionOR", bpr="einstieg"),

    # treatment path headers
    node("bpr_hypoglykaemie", "Hypoglykämie", "bpr", bpr="hypoglykaemie"),
    node("bpr_asthma", "Asthma bronchiale", "bpr", bpr="asthma"),
    node("bpr_kardial", "Akutes Koronarsyndrom", "bpr", bpr="kardial"),
    node("bpr_krampfanfall", "Krampfanfall", "bpr", bpr="krampfanfall"),

    # hypoglycemia path
    node("hypo_bz_check", "Blutzucker kleiner oder gleich 60 mg/dl?",
         "decisionYN", bpr="hypoglykaemie", d_type="vitalwert",
         value="BLOOD_SUGAR", max=60, unit="mg/dl", range_branch="yes"),
    node("hypo_wach_check", "Patient wach und schluckfähig?", "decisionYN",
         bpr="hypoglykaemie"),
    node("hypo_glukose_oral", "Glukose oral verabreichen", "action",
         bpr="hypoglykaemie"),
    node("hypo_iv_zugang", "Intravenösen Zugang legen", "invasiveProcedure",
         bpr="hypoglykaemie"),
    node("hypo_glukose_iv", "Glukose 20% intravenös verabreichen",
         "invasiveProcedure", bpr="hypoglykaemie"),
    node("hypo_bz_recheck",
         "Blutzucker weiterhin kleiner oder gleich 60 mg/dl?", "decisionYN",
         bpr="hypoglykaemie", d_type="vitalwert", value="BLOOD_SUGAR",
         max=60, unit="mg/dl", range_branch="yes"),
    node("hypo_monitoring", "Monitoring fortführen", "action",
         bpr="hypoglykaemie"),
    node("hypo_transport", "Transport vorbereiten", "action",
         bpr="hypoglykaemie"),
    node("disp_glukose_dosis", "Dosierung: Glukose 20%, 0,2 g/kg KG i.v.",
         "display"),
    node("warn_aspiration",
         "Warnung: Aspirationsgefahr bei Bewusstseinstrübung", "warning"),
    node("disp_hypo_ursachen", "Häufige Ursachen einer Hypoglykämie",
         "display"),

    # asthma path
    node("asthma_o2", "Sauerstoffgabe einleiten", "procedure", bpr="asthma"),
    node("asthma_auskultation", "Auskultationsbefund?", "decisionOR",
         bpr="asthma"),
    node("asthma_spastik", "Befund Spastik: Bronchodilatator vernebeln",
         "action", bpr="asthma"),
    node("asthma_rassel", "Befund Rasselgeräusche: Lagerung optimieren",
         "action", bpr="asthma"),
    node("asthma_unauff", "Befund unauffällig: Verlauf beobachten", "action",
         bpr="asthma"),
    node("asthma_verlauf", "Beschwerden rückläufig?", "decisionYN",
         bpr="asthma"),
    node("asthma_ekg", "12-Kanal-EKG schreiben", "procedure", bpr="asthma"),
    node("asthma_transport", "Transport mit Monitoring", "action",
         bpr="asthma"),
    node("disp_o2_kontra", "Hinweise zur Sauerstoffgabe", "display"),

    # cardiac path
    node("kardial_ekg", "12-Kanal-EKG schreiben", "procedure", bpr="kardial"),
    node("kardial_stemi_check", "ST-Hebung im EKG?", "decisionYN",
         bpr="kardial"),
    node("kardial_asa", "ASS intravenös verabreichen", "invasiveProcedure",
         bpr="kardial"),
    node("kardial_puls_check", "Puls im Zielbereich?", "decisionYN",
         bpr="kardial", d_type="vitalwert", value="PULSE", min=50, max=120,
         unit="1/min", range_branch="yes"),
    node("kardial_monitoring", "Monitoring und Verlaufskontrolle", "action",
         bpr="kardial", value="PULSE", min=50, max=120, unit="1/min"),
    node("warn_instabil",
         "Warnung: instabiler Patient, Voranmeldung in der Klinik", "warning"),
    node("kardial_transport", "Transport mit Sondersignal vorbereiten",
         "action", bpr="kardial"),
    node("disp_ass_dosis", "Dosierung: ASS 250 mg i.v.", "display"),

    # seizure path
    node("krampf_aktiv", "Krampfanfall aktuell aktiv?", "decisionYN",
         bpr="krampfanfall"),
    node("krampf_benzo", "Benzodiazepin verabreichen", "invasiveProcedure",
         bpr="krampfanfall"),
    node("krampf_postiktal", "Postiktale Phase: Schutz und Lagerung",
         "action", bpr="krampfanfall"),
    node("krampf_bz", "Blutzucker kleiner oder gleich 60 mg/dl?",
         "decisionYN", bpr="krampfanfall", d_type="vitalwert",
         value="BLOOD_SUGAR", max=60, unit="mg/dl", range_branch="yes"),
    node("krampf_hypo_hinweis",
         "Hinweis: Hypoglykämie als Krampfursache prüfen", "display"),
    node("krampf_transport", "Transport zur Abklärung", "action",
         bpr="krampfanfall"),
    node("disp_benzo_dosis", "Dosierung: Midazolam 5 mg i.n. oder i.m.",
         "display"),

    # standard procedure: i.v. access
    node("saa_iv_zugang", "SAA: Intravenöser Zugang", "saa", saa="iv_zugang"),
    node("saaiv_material", "Material vorbereiten und Venenstauung anlegen",
         "action", saa="iv_zugang"),
    node("saaiv_punktion", "Vene punktieren und Katheter vorschieben",
         "invasiveProcedure", saa="iv_zugang"),
    node("saaiv_fixierung", "Zugang fixieren und durchspülen", "action",
         saa="iv_zugang"),

    # standard procedure: oxygen
    node("saa_sauerstoff", "SAA: Sauerstoffgabe", "saa", saa="sauerstoff"),
    node("saao2_indikation", "SpO2 unter 94 Prozent?", "decisionYN",
         saa="sauerstoff", d_type="vitalwert", value="SPO2", min=94,
         unit="%", range_branch="no"),
    node("saao2_gabe", "Sauerstoff über Maske verabreichen", "action",
         saa="sauerstoff"),
    node("saao2_ende", "Therapieziel prüfen und dokumentieren", "action",
         saa="sauerstoff"),

    # initial assessment chain
    node("cab_c", "c: Kritische Blutungen kontrollieren", "action",
         bpr="cabcde"),
    node("cab_a", "A: Atemwege prüfen und freimachen", "action",
         bpr="cabcde"),
    node("cab_b", "B: Atmung unauffällig?", "decisionYN", bpr="cabcde"),
    node("cab_b_o2", "B: Sauerstoffgabe erwägen", "procedure", bpr="cabcde"),
    node("cab_c2", "C: Kreislauf prüfen, Zugang erwägen", "action",
         bpr="cabcde"),
    node("cab_d", "D: Neurologischer Status (GCS, Pupillen)", "action",
         bpr="cabcde"),
    node("cab_e", "E: Entkleiden, Untersuchung, Wärmeerhalt", "action",
         bpr="cabcde"),
    node("cab_weiter", "Weiteres Vorgehen wählen", "decisionOR",
         bpr="cabcde"),
    node("frage_sd", "Fragebogen zur Situationserkennung ausfüllen",
         "action", bpr="einstieg"),
]

EDGES = [
    # entry
    r("start", "cab_c", 1),
    r("start", "frage_sd", 2),
    r("frage_sd", "hub_dg", 1),

    # initial assessment
    r("cab_c", "cab_a", 1),
    r("cab_a", "cab_b", 1),
    edge("cab_b", "cab_c2", "yes"),
    edge("cab_b", "cab_b_o2", "no"),
    r("cab_b_o2", "cab_c2", 1),
    r("cab_c2", "cab_d", 1),
    r("cab_d", "cab_e", 1),
    r("cab_e", "cab_weiter", 1),
    r("cab_weiter", "hub_dg", 1),
    r("cab_weiter", "hub_bpr", 2),
    r("cab_weiter", "stop_behandlung", "n"),
    edge("cab_b_o2", "saa_sauerstoff", "saa"),
    edge("cab_c2", "saa_iv_zugang", "saa"),

    # jump hubs, opposed pairs per target
    edge("hub_bpr", "bpr_hypoglykaemie", "bpr"),
    edge("bpr_hypoglykaemie", "hub_bpr", "bpr"),
    edge("hub_bpr", "bpr_asthma", "bpr"),
    edge("bpr_asthma", "hub_bpr", "bpr"),
    edge("hub_bpr", "bpr_kardial", "bpr"),
    edge("bpr_kardial", "hub_bpr", "bpr"),
    edge("hub_bpr", "bpr_krampfanfall", "bpr"),
    edge("bpr_krampfanfall", "hub_bpr", "bpr"),
    edge("hub_saa", "saa_iv_zugang", "saa"),
    edge("saa_iv_zugang", "hub_saa", "saa"),
    edge("hub_saa", "saa_sauerstoff", "saa"),
    edge("saa_sauerstoff", "hub_saa", "saa"),
    edge("hub_dg", "dg_metabolisch", "association"),
    edge("dg_metabolisch", "hub_dg", "association"),
    edge("hub_dg", "dg_kardiopulmonal", "association"),
    edge("dg_kardiopulmonal", "hub_dg", "association"),

    # disease groups
    r("dg_metabolisch", "dg_metabolisch_wahl", 1),
    r("dg_metabolisch_wahl", "bpr_hypoglykaemie", 1),
    r("dg_metabolisch_wahl", "bpr_krampfanfall", 2),
    r("dg_kardiopulmonal", "dg_kardiopulmonal_wahl", 1),
    r("dg_kardiopulmonal_wahl", "bpr_kardial", 1),
    r("dg_kardiopulmonal_wahl", "bpr_asthma", 2),
    edge("dg_metabolisch", "bpr_hypoglykaemie", "bpr"),
    edge("dg_metabolisch", "bpr_krampfanfall", "bpr"),
    edge("dg_kardiopulmonal", "bpr_kardial", "bpr"),
    edge("dg_kardiopulmonal", "bpr_asthma", "bpr"),

    # hypoglycemia path
    r("bpr_hypoglykaemie", "hypo_bz_check", 1),
    edge("hypo_bz_check", "hypo_wach_check", "yes"),
    edge("hypo_bz_check", "hypo_monitoring", "no"),
    edge("hypo_wach_check", "hypo_glukose_oral", "yes"),
    edge("hypo_wach_check", "hypo_iv_zugang", "no"),
    r("hypo_iv_zugang", "hypo_glukose_iv", 1),
    r("hypo_glukose_iv", "hypo_bz_recheck", 1),
    r("hypo_glukose_oral", "hypo_bz_recheck", 1),
    edge("hypo_bz_recheck", "hypo_wach_check", "yes"),
    edge("hypo_bz_recheck", "hypo_monitoring", "no"),
    r("hypo_monitoring", "hypo_transport", 1),
    r("hypo_transport", "stop_uebergabe", 1),
    edge("hypo_iv_zugang", "saa_iv_zugang", "saa"),
    edge("hypo_glukose_iv", "disp_glukose_dosis", "additionalInformation"),
    edge("hypo_glukose_oral", "warn_aspiration", "additionalInformation"),
    edge("hypo_wach_check", "disp_hypo_ursachen", "additionalInformation"),

    # asthma path
    r("bpr_asthma", "asthma_o2", 1),
    r("asthma_o2", "asthma_auskultation", 1),
    r("asthma_auskultation", "asthma_spastik", 1),
    r("asthma_auskultation", "asthma_rassel", 2),
    r("asthma_auskultation", "asthma_unauff", "n"),
    r("asthma_spastik", "asthma_verlauf", 1),
    r("asthma_rassel", "asthma_verlauf", 1),
    r("asthma_unauff", "asthma_verlauf", 1),
    edge("asthma_verlauf", "asthma_transport", "yes"),
    edge("asthma_verlauf", "asthma_ekg", "no"),
    r("asthma_ekg", "asthma_transport", 1),
    r("asthma_transport", "stop_uebergabe", 1),
    edge("asthma_o2", "saa_sauerstoff", "saa"),
    edge("asthma_o2", "disp_o2_kontra", "additionalInformation"),
    edge("asthma_ekg", "kardial_ekg", "association"),

    # cardiac path
    r("bpr_kardial", "kardial_ekg", 1),
    r("kardial_ekg", "kardial_stemi_check", 1),
    edge("kardial_stemi_check", "kardial_asa", "yes"),
    edge("kardial_stemi_check", "kardial_puls_check", "no"),
    r("kardial_asa", "kardial_transport", 1),
    edge("kardial_puls_check", "kardial_monitoring", "yes"),
    edge("kardial_puls_check", "warn_instabil", "no"),
    r("kardial_monitoring", "kardial_transport", 1),
    r("warn_instabil", "kardial_transport", 1),
    r("kardial_transport", "stop_uebergabe", 1),
    edge("kardial_asa", "saa_iv_zugang", "saa"),
    edge("kardial_asa", "disp_ass_dosis", "additionalInformation"),
    edge("kardial_ekg", "asthma_ekg", "association"),

    # seizure path
    r("bpr_krampfanfall", "krampf_aktiv", 1),
    edge("krampf_aktiv", "krampf_benzo", "yes"),
    edge("krampf_aktiv", "krampf_postiktal", "no"),
    r("krampf_benzo", "krampf_bz", 1),
    r("krampf_postiktal", "krampf_bz", 1),
    edge("krampf_bz", "krampf_hypo_hinweis", "yes"),
    edge("krampf_bz", "krampf_transport", "no"),
    r("krampf_hypo_hinweis", "krampf_transport", 1),
    r("krampf_transport", "stop_uebergabe", 1),
    edge("krampf_benzo", "saa_iv_zugang", "saa"),
    edge("krampf_benzo", "disp_benzo_dosis", "additionalInformation"),
    edge("krampf_hypo_hinweis", "bpr_hypoglykaemie", "bpr"),

    # standard procedure chains
    r("saa_iv_zugang", "saaiv_material", 1),
    r("saaiv_material", "saaiv_punktion", 1),
    r("saaiv_punktion", "saaiv_fixierung", 1),
    r("saaiv_fixierung", "stop_saa", 1),
    r("saa_sauerstoff", "saao2_indikation", 1),
    edge("saao2_indikation", "saao2_gabe", "yes"),
    edge("saao2_indikation", "saao2_ende", "no"),
    r("saao2_gabe", "saao2_ende", 1),
    r("saao2_ende", "stop_saa", 1),
]

QUESTIONNAIRE = {
    "questions": [
        {"id": "frage_bewusstsein",
         "text": "Ist der Patient bewusstseinsgetrübt?",
         "domain": "boolean",
         "weights": {"dg_kardiopulmonal": 1, "dg_metabolisch": 2}},
        {"id": "frage_atemnot",
         "text": "Hat der Patient akute Atemnot?",
         "domain": "boolean",
         "weights": {"dg_kardiopulmonal": 3, "dg_metabolisch": 0}},
        {"id": "frage_brustschmerz",
         "text": "Klagt der Patient über Brustschmerz?",
         "domain": "boolean",
         "weights": {"dg_kardiopulmonal": 3, "dg_metabolisch": 0}},
        {"id": "frage_diabetes",
         "text": "Ist ein Diabetes mellitus bekannt?",
         "domain": "boolean",
         "weights": {"dg_kardiopulmonal": 0, "dg_metabolisch": 3}},
        {"id": "frage_haut",
         "text": "Wie ist das Hautbild?",
         "domain": ["unauffaellig", "blass", "kaltschweissig"],
         "fires_on": ["blass", "kaltschweissig"],
         "weights": {"dg_kardiopulmonal": 1, "dg_metabolisch": 1}},
    ],
    "vitals_rules": [
        {"parameter": "BLOOD_SUGAR", "comparator": "<=", "threshold": 60,
         "group": "dg_metabolisch", "bonus": 3},
        {"parameter": "SPO2", "comparator": "<=", "threshold": 92,
         "group": "dg_kardiopulmonal", "bonus": 2},
        {"parameter": "PULSE", "comparator": ">=", "threshold": 120,
         "group": "dg_kardiopulmonal", "bonus": 1},
    ],
}


def sanity_check():
    ids = [n["id"] for n in NODES]
    if len(ids) != len(set(ids)):
        raise SystemExit("duplicate node id")
    known = set(ids)
    for e in EDGES:
        if e["from"] not in known or e["to"] not in known:
            raise SystemExit(f"dangling edge {e['from']}->{e['to']}")
    groups = {n["id"] for n in NODES if n["kind"] == "diseaseGroup"}
    for q in QUESTIONNAIRE["questions"]:
        if set(q["weights"]) != groups:
            raise SystemExit(f"weight vector of {q['id']} does not cover groups")
    for rule in QUESTIONNAIRE["vitals_rules"]:
        if rule["group"] not in groups:
            raise SystemExit(f"rule bonus references unknown group {rule['group']}")


def scan_counts(text):
    """Count nodes/edges by scanning file lines, independent of any parser."""
    section = None
    node_count = edge_count = 0
    nodes_by_kind = {}
    edges_by_kind = {}
    kind_re = re.compile(r'^\s{6}"kind": "([^"]+)"')
    for line in text.splitlines():
        if line.startswith('  "nodes": ['):
            section = "nodes"
            continue
        if line.startswith('  "edges": ['):
            section = "edges"
            continue
        if line.startswith('  ]'):
            section = None
            continue
        if section == "nodes" and line.lstrip().startswith('"id":'):
            node_count += 1
        if section == "edges" and line.lstrip().startswith('"from":'):
            edge_count += 1
        m = kind_re.match(line)
        if m and section == "nodes":
            nodes_by_kind[m.group(1)] = nodes_by_kind.get(m.group(1), 0) + 1
        elif m and section == "edges":
            edges_by_kind[m.group(1)] = edges_by_kind.get(m.group(1), 0) + 1
    return {
        "node_count": node_count,
        "edge_count": edge_count,
        "nodes_by_kind": dict(sorted(nodes_by_kind.items())),
        "edges_by_kind": dict(sorted(edges_by_kind.items())),
        "bpr_count": nodes_by_kind.get("bpr", 0),
        "saa_count": nodes_by_kind.get("saa", 0),
    }


def main():
    sanity_check()
    corpus = {
        "meta": {"name": "rettungsdienst-demo", "version": "1.0.0"},
        "nodes": NODES,
        "edges": EDGES,
        "questionnaire": QUESTIONNAIRE,
    }
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    corpus_path = OUT_DIR / "corpus.json"
    text = json.dumps(corpus, indent=2, ensure_ascii=False) + "\n"
    corpus_path.write_text(text, encoding="utf-8")

    manifest = scan_counts(corpus_path.read_text(encoding="utf-8"))
    if sum(manifest["nodes_by_kind"].values()) != manifest["node_count"]:
        raise SystemExit("node count mismatch in scan")
    if sum(manifest["edges_by_kind"].values()) != manifest["edge_count"]:
        raise SystemExit("edge count mismatch in scan")
    manifest_path = OUT_DIR / "corpus.manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    print(f"wrote {corpus_path} ({manifest['node_count']} nodes, "
          f"{manifest['edge_count']} edges)")
    print(f"wrote {manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

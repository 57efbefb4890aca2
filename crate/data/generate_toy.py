"""Regenerates toy_corpus.csv and toy_squad.json; answer_start offsets are computed, not hand-typed."""
import csv, json, os

HERE = os.path.dirname(os.path.abspath(__file__))

A = [
 ("32150001", "Clinical features of patients infected with a novel coronavirus in Wuhan", "2020-01-24",
  ["Huang C; Wang Y; Li X"],
  ["A cluster of pneumonia cases of unknown cause was reported in Wuhan in December 2019.",
   "The most common symptoms at onset of illness were fever and dry cough, followed by myalgia and fatigue. Less common symptoms were sputum production, headache and haemoptysis.",
   "Patients admitted to the intensive care unit had higher plasma levels of inflammatory cytokines."]),
 ("32150002", "Incubation period of coronavirus disease estimated from publicly reported cases", "2020-03-10",
  ["Lauer SA; Grantz KH"],
  ["We collected reports of confirmed cases with identifiable exposure windows and symptom onset.",
   "The estimated median incubation period of 5.1 days supports current quarantine guidance, and 97.5% of infected persons develop symptoms within 11.5 days of infection.",
   "These estimates support a 14-day quarantine period for exposed persons."]),
 ("32150003", "Human bocavirus in children with acute wheezing", "2019-06-02",
  ["Allander T; Jartti T"],
  ["Human bocavirus is a parvovirus first identified in respiratory secretions of children.",
   "Bocavirus DNA was detected in 19% of nasopharyngeal aspirates from wheezing children, frequently together with rhinovirus.",
   "High viral loads were associated with viremia and more severe disease."]),
 ("32150004", "Safety and efficacy of an mRNA vaccine against symptomatic infection", "2020-12-10",
  ["Polack FP; Thomas SJ"],
  ["Participants were randomly assigned to receive two doses, 21 days apart, of vaccine or placebo.",
   "Vaccine efficacy of 95% against laboratory-confirmed symptomatic infection was observed in participants without prior infection.",
   "Reactogenicity was mostly mild to moderate, with injection-site pain the most frequent local reaction."]),
 ("32150005", "Aerosol and surface stability of the virus", "2020-03-17",
  ["van Doremalen N; Bushmaker T"],
  ["We evaluated the stability of the virus in aerosols and on various surfaces.",
   "Viable virus persisted for up to 72 hours on plastic and stainless steel surfaces, but no viable virus was measured after 4 hours on copper.",
   "Aerosol transmission is plausible, since the virus remained viable in aerosols for three hours."]),
 ("32150006", "Symptoms reported by children in a paediatric cohort", "2020-05-20",
  ["Nathan N; Prevost B"],
  ["Children were enrolled from outpatient clinics and followed with daily symptom diaries.",
   "Parents frequently reported tearing of the eyes, sore throat, cough, and runny nose as the presenting complaints in toddlers.",
   "Most children recovered within one week without hospital admission."]),
 ("32150007", "Dexamethasone in hospitalized patients", "2020-07-17",
  ["Horby P; Lim WS"],
  ["In this controlled open-label trial, patients were assigned to oral or intravenous dexamethasone or to usual care.",
   "Dexamethasone reduced by about one third the 28-day mortality among patients receiving invasive mechanical ventilation.",
   "No benefit was found among patients who did not require respiratory support."]),
 ("32150008", "Receptor binding of the spike protein", "2020-03-04",
  ["Hoffmann M; Pohlmann S"],
  ["Viral entry into target cells depends on binding of the spike protein to a cellular receptor.",
   "The spike protein uses angiotensin converting enzyme 2 as its entry receptor and the serine protease TMPRSS2 for priming.",
   "A clinically proven protease inhibitor blocked entry and might constitute a treatment option."]),
 ("32150009", "Anosmia and dysgeusia as early markers", "2020-04-12",
  ["Lechien JR; Saussez S"],
  ["Olfactory and gustatory dysfunctions were assessed with a standardized questionnaire.",
   "Sudden anosmia affected 86% of patients with olfactory dysfunction, frequently before other general symptoms appeared.",
   "Early recovery of olfaction was observed in a quarter of patients within two weeks."]),
 ("32150010", "Seasonal influenza surveillance in sentinel clinics", "2019-02-11",
  ["Smith J; Garcia L"],
  ["Sentinel general practitioners collected nasal swabs from patients with influenza-like illness.",
   "Influenza B Victoria lineage viruses predominated during the late season in the southern region.",
   "Vaccine match was assessed against circulating hemagglutinin clades."]),
 ("32150011", "Ventilation and airborne transmission in restaurants", "2020-09-01",
  ["Lu J; Gu J"],
  ["An outbreak was investigated among diners at three tables in an air-conditioned restaurant.",
   "Droplet transmission was prompted by air-conditioned ventilation carrying the virus between neighbouring tables.",
   "Increasing the distance between tables and improving ventilation are recommended."]),
 ("32150012", "Hydroxychloroquine for postexposure prophylaxis", "2020-06-03",
  ["Boulware DR; Pullen MF"],
  ["Adults with household or occupational exposure were randomized within four days of exposure.",
   "Hydroxychloroquine did not prevent illness compatible with infection when used as postexposure prophylaxis.",
   "Side effects were more common with hydroxychloroquine than with placebo, although no serious reactions were reported."]),
]

with open(os.path.join(HERE, "toy_corpus.csv"), "w", newline="", encoding="utf-8") as f:
    w = csv.writer(f)
    w.writerow(["PMID", "title", "paragraphs", "URL", "publication date", "authors", "full_text"])
    for pmid, title, date, authors, paras in A:
        w.writerow([pmid, title, json.dumps(paras, ensure_ascii=False),
                    f"https://pubmed.ncbi.nlm.nih.gov/{pmid}/", date, json.dumps(authors[0].split("; ")), ""])

Q = [
 ("q01", "32150001", "Which most common symptoms at onset of illness were followed by myalgia and fatigue?", "fever and dry cough"),
 ("q02", "32150002", "Which estimated median incubation period supports current quarantine guidance?", "5.1 days"),
 ("q03", "32150003", "Bocavirus DNA was detected in what fraction of nasopharyngeal aspirates?", "19%"),
 ("q04", "32150004", "What vaccine efficacy against laboratory-confirmed symptomatic infection was observed?", "95%"),
 ("q05", "32150005", "Viable virus persisted for how long on plastic and stainless steel surfaces?", "up to 72 hours"),
 ("q06", "32150006", "Parents frequently reported which presenting complaints in toddlers?", "tearing of the eyes, sore throat, cough, and runny nose"),
 ("q07", "32150007", "Dexamethasone reduced by how much the 28-day mortality?", "about one third"),
 ("q08", "32150008", "The spike protein uses which enzyme as its entry receptor?", "angiotensin converting enzyme 2"),
 ("q09", "32150009", "Sudden anosmia affected what share of patients with olfactory dysfunction?", "86%"),
 ("q10", "32150011", "Droplet transmission was prompted by what, carrying the virus between neighbouring tables?", "air-conditioned ventilation"),
]
by = {a[0]: a for a in A}
data = []
for qid, pmid, q, ans in Q:
    para = next(p for p in by[pmid][4] if ans in p)
    data.append({"title": by[pmid][1], "paragraphs": [{
        "context": para,
        "document_id": pmid,
        "qas": [{"id": qid, "question": q, "is_impossible": False,
                 "answers": [{"text": ans, "answer_start": para.index(ans)}]}]}]})
with open(os.path.join(HERE, "toy_squad.json"), "w", encoding="utf-8") as f:
    json.dump({"version": "v2.0", "data": data}, f, indent=2, ensure_ascii=False)
    f.write("\n")

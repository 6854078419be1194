//! Synthetic demo fixture with a known answer.
//!
//! The general corpus hides 200 crisis-domain segments among out-of-domain
//! parliamentary, cultural, sports and economic text, plus noise rows that
//! cleaning must drop. Vectors are drawn around five hazard centers so the
//! planted rows rank first; `planted.txt` is the ground truth and
//! `truth.csv` is an oracle annotator that labels every general segment.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use crate::error::CliResult;
use crisismine_core::corpus::{serialize_corpus, Corpus, CorpusFormat, Segment};
use crisismine_core::dataset::{quality_gate, GateConfig, OfflineTable};
use crisismine_core::digest::write_artifact;
use crisismine_core::embedding::{vecfile, EmbeddingMatrix};
use crisismine_core::threshold::{labels_to_csv, DomainLabel, DomainLabelKind, HazardCluster};
use crisismine_core::Error;

pub const DIM: usize = 64;
pub const SEED: u64 = 0x5eed_2024;
pub const PLANTED: usize = 200;
pub const CLUSTERS: usize = 5;

const TOWNS: &[&str] = &[
    "Lucca", "Pistoia", "Arezzo", "Foligno", "Sulmona", "Belluno", "Cuneo", "Matera", "Rieti", "Teramo", "Massa",
    "Imperia", "Gorizia", "Potenza", "Avellino",
];
const RIVERS: &[&str] = &["Arno", "Serchio", "Tevere", "Piave", "Adige", "Ombrone", "Secchia", "Bormida"];
const DAYS: &[(&str, &str)] = &[
    ("lunedì", "Monday"),
    ("martedì", "Tuesday"),
    ("mercoledì", "Wednesday"),
    ("giovedì", "Thursday"),
    ("venerdì", "Friday"),
    ("sabato", "Saturday"),
    ("domenica", "Sunday"),
];
const MONTHS: &[(&str, &str)] = &[
    ("gennaio", "January"),
    ("marzo", "March"),
    ("maggio", "May"),
    ("luglio", "July"),
    ("settembre", "September"),
    ("novembre", "November"),
];

/// Italian, hard English, easy English.
type Slot = (&'static str, &'static str, &'static str);

const SUBJECTS: &[Slot] = &[
    ("La Protezione civile regionale", "The regional Civil Protection department", "Civil Protection"),
    ("Il sindaco di {town}", "The mayor of {town}", "The mayor of {town}"),
    ("La prefettura di {town}", "The prefecture of {town}", "The prefecture of {town}"),
    ("Il centro operativo comunale", "The municipal emergency operations centre", "The town emergency centre"),
    ("Il comando provinciale dei vigili del fuoco", "The provincial fire brigade command", "The fire brigade"),
];

const ACTIONS: &[Slot] = &[
    (
        "ha disposto l'evacuazione preventiva delle abitazioni",
        "has ordered the precautionary evacuation of residential buildings",
        "has ordered the evacuation of homes",
    ),
    ("ha emesso un'allerta rossa", "has issued a red alert", "has issued a red alert"),
    (
        "ha chiuso al traffico le strade provinciali",
        "has closed the provincial roads to all traffic",
        "has closed the provincial roads to traffic",
    ),
    (
        "ha sospeso tutte le attività scolastiche",
        "has suspended all educational activities",
        "has suspended all school activities",
    ),
    ("ha attivato le squadre di soccorso", "has activated the rescue teams", "has activated the rescue teams"),
    (
        "ha allestito centri di accoglienza temporanei",
        "has set up temporary reception centres",
        "has set up temporary reception centres",
    ),
];

const PLACES: &[Slot] = &[
    ("nei comuni della bassa valle", "in the municipalities of the lower valley", "This applies to the towns of the lower valley"),
    ("nel centro storico di {town}", "in the historic centre of {town}", "This applies to the historic centre of {town}"),
    ("nelle frazioni di montagna", "in the mountain hamlets", "This applies to the mountain hamlets"),
    ("lungo la costa tra {town} e {town2}", "along the coast between {town} and {town2}", "This applies to the coast from {town} to {town2}"),
    (
        "nella zona industriale a nord della città",
        "in the industrial area north of the city",
        "This applies to the industrial area north of the city",
    ),
];

/// Indexed by hazard cluster.
const REASONS: &[Slot] = &[
    (
        "a causa delle precipitazioni intense previste sul bacino del fiume {river}",
        "because of the intense precipitation forecast over the {river} river basin",
        "Heavy rain will fall on the {river} river basin.",
    ),
    (
        "dopo la scossa di terremoto di magnitudo {mag} registrata nella notte",
        "following the magnitude {mag} earthquake recorded during the night",
        "A magnitude {mag} earthquake was recorded during the night.",
    ),
    (
        "per il rischio elevato di incendi boschivi sulle colline",
        "due to the elevated risk of forest fires on the surrounding hills",
        "The risk of forest fires on the hills is high.",
    ),
    (
        "a causa dell'ondata di calore con temperature fino a {temp} gradi",
        "because of the heat wave with temperatures reaching {temp} degrees",
        "A heat wave is coming. Temperatures will reach {temp} degrees.",
    ),
    (
        "per la fuga di sostanze tossiche dallo stabilimento chimico",
        "owing to the leak of toxic substances from the chemical plant",
        "Toxic gas is leaking from the chemical plant.",
    ),
];

const HAZARDS: [HazardCluster; CLUSTERS] = [
    HazardCluster::MeteorologicalHydrological,
    HazardCluster::Geological,
    HazardCluster::Environmental,
    HazardCluster::MeteorologicalHydrological,
    HazardCluster::Technological,
];

const TIMES: &[Slot] = &[
    ("fino alle ore {hour} di {day_it}", "until {hour}:00 on {day}", "This lasts until {hour}:00 on {day}."),
    ("per le prossime {n} ore", "for the next {n} hours", "This lasts for the next {n} hours."),
    ("a partire da {day_it} mattina", "starting from {day} morning", "It starts on {day} morning."),
    ("fino a nuova comunicazione", "until further notice", "It lasts until further notice."),
];

const TAILS: &[Slot] = &[
    (
        "e invita la popolazione a raggiungere le aree di attesa e a chiamare il 112 solo in caso di reale emergenza.",
        "and urges the population to reach the designated waiting areas and to call 112 only in case of real emergency.",
        "Reach the waiting areas. Call 112 only in a real emergency.",
    ),
    (
        "e raccomanda ai residenti di evitare gli spostamenti non necessari e di seguire gli aggiornamenti ufficiali.",
        "and advises residents to avoid unnecessary journeys and to follow the official updates.",
        "Avoid journeys you do not need. Follow the official news.",
    ),
    (
        "e chiede ai cittadini di non sostare vicino ai corsi d'acqua e di salire ai piani più alti degli edifici.",
        "and asks citizens not to stand near watercourses and to move to the upper floors of buildings.",
        "Do not stand near watercourses. Move to the upper floors of buildings.",
    ),
    (
        "e ricorda che l'accesso alle aree colpite è vietato fino al termine delle verifiche tecniche.",
        "and reminds everyone that access to the affected areas is forbidden until the technical checks are completed.",
        "Access to the affected areas is forbidden. Wait for the checks to end.",
    ),
    (
        "e consiglia di tenere pronti documenti, medicinali e una scorta di acqua potabile.",
        "and recommends keeping documents, medicines and a supply of drinking water ready.",
        "Have your documents ready. Keep medicines and water too. Be safe.",
    ),
];

/// Italian, English pairs for the out-of-domain templates.
type Pair = (&'static str, &'static str);

struct Template {
    slots: &'static [&'static [Pair]],
}

const OOD: &[Template] = &[
    Template {
        slots: &[
            &[
                ("Il Parlamento europeo", "The European Parliament"),
                ("La commissione per l'agricoltura", "The Committee on Agriculture"),
                ("Il Consiglio dei ministri", "The Council of Ministers"),
                ("La delegazione italiana", "The Italian delegation"),
                ("Il gruppo dei socialisti", "The Socialist group"),
            ],
            &[
                ("ha approvato con una larga maggioranza la relazione sulla", "has approved by a large majority the report on"),
                ("ha discusso a lungo la proposta di riforma della", "has discussed at length the reform proposal concerning"),
                ("ha chiesto alla Commissione maggiori garanzie sulla", "has asked the Commission for stronger guarantees on"),
                ("ha presentato diversi emendamenti alla direttiva sulla", "has tabled several amendments to the directive on"),
                ("ha espresso forti riserve sulla", "has expressed strong reservations about"),
            ],
            &[
                ("politica agricola comune", "the common agricultural policy"),
                ("tutela dei consumatori nel mercato interno", "consumer protection in the internal market"),
                ("cooperazione culturale tra gli Stati membri", "cultural cooperation between the Member States"),
                ("trasparenza del bilancio dell'Unione", "the transparency of the Union budget"),
                ("mobilità dei lavoratori e degli studenti", "the mobility of workers and students"),
                ("parità di trattamento nelle assunzioni", "equal treatment in recruitment"),
            ],
            &[
                ("durante la sessione plenaria di {month_it}.", "during the {month} plenary session."),
                ("dopo un dibattito durato {n} ore.", "after a debate lasting {n} hours."),
                ("con {votes} voti favorevoli e pochi astenuti.", "with {votes} votes in favour and few abstentions."),
                ("nonostante l'opposizione di alcuni gruppi politici.", "despite the opposition of some political groups."),
            ],
        ],
    },
    Template {
        slots: &[
            &[
                ("Il museo civico di {town}", "The civic museum of {town}"),
                ("La biblioteca comunale di {town}", "The municipal library of {town}"),
                ("Il palazzo vescovile", "The bishop's palace"),
                ("La pinacoteca nazionale", "The national picture gallery"),
            ],
            &[
                ("conserva una ricca collezione di", "holds a rich collection of"),
                ("ospita ogni anno una mostra dedicata ai", "hosts every year an exhibition devoted to"),
                ("ha ricevuto in dono una raccolta di", "has received as a gift a collection of"),
                ("espone nelle sale del primo piano", "displays in the first floor rooms"),
            ],
            &[
                ("dipinti del Rinascimento toscano", "Tuscan Renaissance paintings"),
                ("manoscritti medievali miniati", "illuminated medieval manuscripts"),
                ("antiche mappe della regione", "old maps of the region"),
                ("strumenti musicali del Settecento", "eighteenth century musical instruments"),
                ("ceramiche di produzione locale", "locally produced ceramics"),
            ],
            &[
                ("ed è aperto al pubblico tutti i giorni tranne il lunedì.", "and is open to the public every day except Monday."),
                ("e attira molti visitatori durante l'estate.", "and attracts many visitors during the summer."),
                ("secondo una guida pubblicata nel {year}.", "according to a guide published in {year}."),
                ("grazie alla generosità di una famiglia di mercanti.", "thanks to the generosity of a family of merchants."),
            ],
        ],
    },
    Template {
        slots: &[
            &[
                ("La squadra di calcio di {town}", "The {town} football team"),
                ("La formazione di pallavolo femminile", "The women's volleyball side"),
                ("Il club di basket cittadino", "The city basketball club"),
            ],
            &[
                ("ha vinto con merito la partita di domenica contro", "deservedly won Sunday's match against"),
                ("ha pareggiato in trasferta contro", "drew away against"),
                ("ha perso di misura lo scontro diretto con", "narrowly lost the head to head clash with"),
            ],
            &[
                ("la prima in classifica", "the league leaders"),
                ("una neopromossa molto combattiva", "a very combative newly promoted side"),
                ("gli storici rivali della provincia", "their historic provincial rivals"),
                ("una delle favorite per il titolo", "one of the favourites for the title"),
            ],
            &[
                ("davanti a {crowd} spettatori entusiasti.", "in front of {crowd} enthusiastic spectators."),
                ("grazie a una grande prova del capitano.", "thanks to a great performance by the captain."),
                ("e ora guarda con fiducia al girone di ritorno.", "and now looks with confidence to the second half of the season."),
            ],
        ],
    },
    Template {
        slots: &[
            &[
                ("Le esportazioni di vino", "Wine exports"),
                ("Le vendite di macchinari agricoli", "Sales of agricultural machinery"),
                ("Gli investimenti nel settore tessile", "Investment in the textile sector"),
                ("Le presenze turistiche nelle città d'arte", "Tourist stays in the art cities"),
            ],
            &[
                ("sono cresciute del {pct} per cento", "grew by {pct} per cent"),
                ("sono diminuite del {pct} per cento", "fell by {pct} per cent"),
                ("sono rimaste sostanzialmente stabili", "remained broadly stable"),
            ],
            &[
                ("nel primo trimestre dell'anno", "in the first quarter of the year"),
                ("rispetto allo stesso periodo del {year}", "compared with the same period of {year}"),
                ("nelle regioni del centro e del nord", "in the central and northern regions"),
            ],
            &[
                ("secondo i dati diffusi dall'istituto di statistica.", "according to data released by the statistics institute."),
                ("come previsto dagli analisti del settore.", "as forecast by industry analysts."),
                ("nonostante l'aumento dei costi energetici.", "despite the rise in energy costs."),
            ],
        ],
    },
];

const SHORT_ROWS: &[Pair] = &[
    ("Grazie, signor Presidente.", "Thank you, Mr President."),
    ("La seduta è aperta.", "The sitting is open."),
    ("Approvazione del processo verbale.", "Approval of the minutes."),
    ("Votazione per appello nominale.", "Vote by roll call."),
    ("La discussione è chiusa.", "The debate is closed."),
    ("Ha facoltà di parlare.", "You have the floor."),
    ("Segue la votazione.", "The vote will follow."),
    ("Benvenuti al museo.", "Welcome to the museum."),
    ("Partita rinviata per pioggia.", "Match postponed because of rain."),
    ("Risultato finale due a uno.", "Final score two to one."),
];

const ENGLISH_SOURCE: &[&str] = &[
    "The committee adopted its opinion on the draft budget after a long debate.",
    "Visitors can book a guided tour of the cathedral every Saturday morning.",
    "The home side scored twice in the second half to secure the win.",
    "Exports of olive oil rose sharply during the last quarter of the year.",
    "Members of Parliament asked for more information about the new programme.",
    "The library will remain open until late in the evening during the exam period.",
    "The coach praised the young players for their effort and discipline.",
    "The report calls for closer cooperation between national statistics offices.",
    "The exhibition brings together more than two hundred works from private collections.",
    "The rapporteur thanked colleagues from all groups for their constructive work.",
];

const MALFORMED: &[Pair] = &[
    ("Il relatore ha ricordato (vedi allegato tecnico della relazione sul bilancio annuale", "The rapporteur recalled (see the technical annex of the annual budget report"),
    ("Il museo espone [sezione dedicata alla ceramica antica e ai bronzi della città", "The museum displays [section devoted to ancient ceramics and the city bronzes"),
    ("La squadra ha vinto «una partita difficile contro la capolista del girone", "The team won «a difficult match against the leaders of the group"),
    ("Le vendite sono cresciute ((dati provvisori) nel secondo trimestre dell'anno in corso", "Sales grew ((provisional data) in the second quarter of the current year"),
    ("La commissione ha approvato {il testo con alcune modifiche proposte dai relatori", "The committee approved {the text with some amendments proposed by the rapporteurs"),
    ("IL CONSIGLIO HA APPROVATO ALL'UNANIMITÀ IL REGOLAMENTO SUL MERCATO INTERNO DELLE MERCI", "THE COUNCIL UNANIMOUSLY APPROVED THE REGULATION ON THE INTERNAL MARKET IN GOODS"),
    ("La biblioteca conserva \"manoscritti rari e alcune edizioni a stampa del Cinquecento", "The library holds \"rare manuscripts and some printed editions from the sixteenth century"),
    ("La delegazione ha chiesto chiarimenti) sulla ripartizione dei fondi tra le regioni", "The delegation asked for clarification) on the distribution of funds between regions"),
    ("LA FORMAZIONE DI CASA HA CHIUSO IL PRIMO TEMPO IN VANTAGGIO DI DUE RETI", "THE HOME SIDE FINISHED THE FIRST HALF TWO GOALS AHEAD"),
    ("Gli investimenti [dati aggiornati] sono cresciuti] rispetto allo scorso anno nelle aree interne", "Investment [updated figures] grew] compared with last year in inland areas"),
];

struct Fill {
    town: &'static str,
    town2: &'static str,
    river: &'static str,
    day: (&'static str, &'static str),
    month: (&'static str, &'static str),
    hour: u32,
    n: u32,
    mag: String,
    temp: u32,
    votes: u32,
    year: u32,
    crowd: u32,
    pct: u32,
}

impl Fill {
    fn draw(rng: &mut ChaCha8Rng) -> Fill {
        let town = *TOWNS.choose(rng).unwrap();
        let town2 = loop {
            let t = *TOWNS.choose(rng).unwrap();
            if t != town {
                break t;
            }
        };
        Fill {
            town,
            town2,
            river: RIVERS.choose(rng).unwrap(),
            day: *DAYS.choose(rng).unwrap(),
            month: *MONTHS.choose(rng).unwrap(),
            hour: rng.random_range(6..23),
            n: rng.random_range(12..73),
            mag: format!("{}.{}", rng.random_range(3..6), rng.random_range(0..10)),
            temp: rng.random_range(38..45),
            votes: rng.random_range(320..540),
            year: rng.random_range(1890..2020),
            crowd: rng.random_range(2..30) * 1000,
            pct: rng.random_range(2..19),
        }
    }

    fn apply(&self, t: &str) -> String {
        t.replace("{town2}", self.town2)
            .replace("{town}", self.town)
            .replace("{river}", self.river)
            .replace("{day_it}", self.day.0)
            .replace("{day}", self.day.1)
            .replace("{month_it}", self.month.0)
            .replace("{month}", self.month.1)
            .replace("{hour}", &self.hour.to_string())
            .replace("{n}", &self.n.to_string())
            .replace("{mag}", &self.mag)
            .replace("{temp}", &self.temp.to_string())
            .replace("{votes}", &self.votes.to_string())
            .replace("{year}", &self.year.to_string())
            .replace("{crowd}", &self.crowd.to_string())
            .replace("{pct}", &self.pct.to_string())
    }
}

/// One crisis sentence: slot indices into SUBJECTS, ACTIONS, PLACES,
/// REASONS, TIMES, TAILS.
pub type Frame = [usize; 6];

struct Crisis {
    it: String,
    en: String,
    easy: String,
    hazard: usize,
}

fn crisis(frame: Frame, fill: &Fill) -> Crisis {
    let [s, a, p, r, t, tail] = frame;
    let it = format!(
        "{} {} {} {} {} {}",
        SUBJECTS[s].0, ACTIONS[a].0, PLACES[p].0, REASONS[r].0, TIMES[t].0, TAILS[tail].0
    );
    let en = format!(
        "{} {} {} {} {} {}",
        SUBJECTS[s].1, ACTIONS[a].1, PLACES[p].1, REASONS[r].1, TIMES[t].1, TAILS[tail].1
    );
    let easy = format!(
        "{} {}. {}. {} {} {}",
        SUBJECTS[s].2, ACTIONS[a].2, PLACES[p].2, REASONS[r].2, TIMES[t].2, TAILS[tail].2
    );
    Crisis {
        it: fill.apply(&it),
        en: fill.apply(&en),
        easy: fill.apply(&easy),
        hazard: r,
    }
}

/// A random frame not used before, with `fixed` (slot, value) overrides.
fn draw_frame(rng: &mut ChaCha8Rng, used: &mut HashSet<Frame>, fixed: &[(usize, usize)]) -> Frame {
    let sizes = [SUBJECTS.len(), ACTIONS.len(), PLACES.len(), REASONS.len(), TIMES.len(), TAILS.len()];
    loop {
        let mut f: Frame = std::array::from_fn(|i| rng.random_range(0..sizes[i]));
        for &(slot, v) in fixed {
            f[slot] = v;
        }
        if used.insert(f) {
            return f;
        }
    }
}

fn ood_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<Pair2> {
    let mut used = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = rng.random_range(0..OOD.len());
        let picks: Vec<usize> = OOD[t].slots.iter().map(|s| rng.random_range(0..s.len())).collect();
        if !used.insert((t, picks.clone())) {
            continue;
        }
        let fill = Fill::draw(rng);
        let it: Vec<&str> = OOD[t].slots.iter().zip(&picks).map(|(s, &i)| s[i].0).collect();
        let en: Vec<&str> = OOD[t].slots.iter().zip(&picks).map(|(s, &i)| s[i].1).collect();
        out.push((fill.apply(&it.join(" ")), fill.apply(&en.join(" "))));
    }
    out
}

type Pair2 = (String, String);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Planted(usize),
    OutOfDomain,
    Borderline(usize),
    Noise,
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn around(rng: &mut ChaCha8Rng, center: &[f64], sigma: f64) -> Vec<f32> {
    let g = gaussian(rng);
    center.iter().zip(g).map(|(c, e)| (c + sigma * e) as f32).collect()
}

/// The generated fixture: file name to bytes, plus the planted ids.
pub struct Demo {
    pub files: BTreeMap<String, Vec<u8>>,
    pub planted: Vec<String>,
}

pub const CONFIG: &str = r#"# Demo pipeline over the synthetic fixture in this directory.
out_dir = "out"

[inputs]
reference = "reference.jsonl"
general = "general.jsonl"

[embedding]
provider = "file"
vectors = "vectors.cvec"
dim = 64

[retrieval]
k = 5
top_k = 300
seed = 7

[threshold]
num_partitions = 6
per_partition = 10
seed = 11

[annotation]
labels = "truth.csv"
labels_allow_extra = true

[dataset.simplifier]
offline_table = "simplifications.jsonl"

[evaluation]
hypotheses = "eval/hyp.txt"
references = "eval/ref.txt"
sources = "eval/src.txt"
mqm_annotations = "eval/mqm.jsonl"
"#;

fn data(e: impl std::fmt::Display) -> Error {
    Error::Data(e.to_string())
}

/// Builds the fixture in memory. Deterministic.
pub fn build() -> CliResult<Demo> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let centers: Vec<Vec<f64>> = (0..CLUSTERS).map(|_| unit(gaussian(&mut rng))).collect();
    let gate = GateConfig::default();

    // reference corpus: 12 rows per hazard, then duplicates
    let mut used = HashSet::new();
    let mut reference: Vec<Segment> = Vec::new();
    let mut ref_vecs: Vec<(String, Vec<f32>)> = Vec::new();
    let mut table = OfflineTable::default();
    for i in 0..60 {
        // every sixth rewrite is deliberately unusable
        let bad = i % 6 == 5;
        let mut fixed = vec![(3, i % CLUSTERS)];
        if bad {
            fixed.push((4, 1));
        }
        let frame = draw_frame(&mut rng, &mut used, &fixed);
        let fill = Fill::draw(&mut rng);
        let c = crisis(frame, &fill);
        let id = format!("ref-{:03}", i + 1);
        let simplified = if !bad {
            c.easy.clone()
        } else if i % 12 == 5 {
            c.easy.replace(&format!("next {} hours", fill.n), "next few hours")
        } else {
            format!("Please note that {}", c.en.replacen("The ", "the ", 1))
        };
        let report = quality_gate(&c.en, &simplified, &gate, None);
        if report.passed == bad {
            return Err(data(format!(
                "demo rewrite for {id} {} the gate ({}): {simplified}",
                if report.passed { "unexpectedly passes" } else { "fails" },
                report.reasons.join("; ")
            ))
            .into());
        }
        table.insert(&c.en, simplified);
        ref_vecs.push((id.clone(), around(&mut rng, &centers[c.hazard], 0.055)));
        reference.push(Segment::new(id, c.it, c.en, "Reference"));
    }
    let unique_ref = reference.len();
    for i in 0..6 {
        let src = &reference[i * 7].clone();
        let id = format!("ref-{:03}", unique_ref + i + 1);
        ref_vecs.push((id.clone(), around(&mut rng, &centers[i % CLUSTERS], 0.055)));
        reference.push(Segment::new(id, &src.source_text, &src.target_text, "Reference"));
    }
    for i in 0..6 {
        let src = &reference[i * 9 + 3].clone();
        let id = format!("ref-{:03}", unique_ref + 7 + i);
        let it = src.source_text.replacen(" e ", " ed anche ", 1);
        ref_vecs.push((id.clone(), around(&mut rng, &centers[i % CLUSTERS], 0.055)));
        reference.push(Segment::new(id, it, &src.target_text, "Reference"));
    }

    // general corpus
    let mut rows: Vec<(Pair2, Kind)> = Vec::new();
    for _ in 0..PLANTED {
        let frame = draw_frame(&mut rng, &mut used, &[]);
        let c = crisis(frame, &Fill::draw(&mut rng));
        rows.push(((c.it, c.en), Kind::Planted(c.hazard)));
    }
    let ood = ood_rows(&mut rng, 345);
    for (i, p) in ood.iter().enumerate() {
        let kind = if i < 20 { Kind::Borderline(i % CLUSTERS) } else { Kind::OutOfDomain };
        rows.push((p.clone(), kind));
    }
    rows.shuffle(&mut rng);
    let mut noise: Vec<(Pair2, Option<usize>)> = Vec::new();
    for i in 0..15 {
        let k = (i * 37 + 11) % rows.len();
        let k = (k..rows.len()).chain(0..k).find(|&j| rows[j].1 == Kind::OutOfDomain).unwrap();
        noise.push((rows[k].0.clone(), Some(k)));
    }
    for i in 0..10 {
        let k = (i * 53 + 29) % rows.len();
        let k = (k..rows.len()).chain(0..k).find(|&j| rows[j].1 == Kind::OutOfDomain).unwrap();
        let (it, en) = &rows[k].0;
        let near = (format!("Inoltre, {}", lower_first(it)), format!("In addition, {}", lower_first(en)));
        noise.push((near, Some(k)));
    }
    for (it, en) in SHORT_ROWS {
        noise.push(((it.to_string(), en.to_string()), None));
    }
    for en in ENGLISH_SOURCE {
        noise.push(((en.to_string(), en.to_string()), None));
    }
    for (it, en) in MALFORMED {
        noise.push(((it.to_string(), en.to_string()), None));
    }
    // place each noise row at a random position after its original
    let mut order: Vec<(Pair2, Kind)> = rows;
    for (pair, orig) in noise {
        let lo = orig.map_or(0, |k| k + 1);
        let at = rng.random_range(lo..=order.len());
        order.insert(at, (pair, Kind::Noise));
    }
    debug_assert_eq!(order.len(), 600);

    let mut general = Vec::with_capacity(order.len());
    let mut gen_vecs = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    let mut planted = Vec::new();
    let mut sigmas: Vec<f64> = (0..PLANTED).map(|i| 0.04 + 0.12 * i as f64 / (PLANTED - 1) as f64).collect();
    sigmas.shuffle(&mut rng);
    let mut sigma_iter = sigmas.into_iter();
    for (i, ((it, en), kind)) in order.into_iter().enumerate() {
        let id = format!("gen-{:04}", i + 1);
        let v: Vec<f32> = match kind {
            Kind::Planted(h) => around(&mut rng, &centers[h], sigma_iter.next().unwrap()),
            Kind::Borderline(h) => {
                let r = unit(gaussian(&mut rng));
                centers[h].iter().zip(r).map(|(c, e)| (0.5 * c + e) as f32).collect()
            }
            Kind::OutOfDomain | Kind::Noise => unit(gaussian(&mut rng)).into_iter().map(|x| x as f32).collect(),
        };
        let (label, hazard_tag) = match kind {
            Kind::Planted(h) => {
                planted.push(id.clone());
                (DomainLabelKind::InDomain, Some(HAZARDS[h]))
            }
            _ => (DomainLabelKind::OutOfDomain, None),
        };
        labels.push(DomainLabel {
            segment_id: id.clone(),
            label,
            annotator: "oracle".into(),
            hazard_tag,
            timestamp: None,
        });
        gen_vecs.push((id.clone(), v));
        general.push(Segment::new(id, it, en, "General"));
    }

    let (ids, vecs): (Vec<String>, Vec<Vec<f32>>) = ref_vecs.into_iter().chain(gen_vecs).unzip();
    let matrix = EmbeddingMatrix::from_rows(ids, vecs)?;

    let mut files = BTreeMap::new();
    files.insert("crisismine.toml".to_string(), CONFIG.as_bytes().to_vec());
    files.insert(
        "reference.jsonl".to_string(),
        serialize_corpus(&Corpus::new("reference", reference.clone()), CorpusFormat::Jsonl)?,
    );
    files.insert(
        "general.jsonl".to_string(),
        serialize_corpus(&Corpus::new("general", general), CorpusFormat::Jsonl)?,
    );
    files.insert("vectors.cvec".to_string(), vecfile::encode(&matrix));
    files.insert("truth.csv".to_string(), labels_to_csv(&labels).into_bytes());
    files.insert("simplifications.jsonl".to_string(), table.to_jsonl().into_bytes());
    let mut planted_txt = planted.join("\n");
    planted_txt.push('\n');
    files.insert("planted.txt".to_string(), planted_txt.into_bytes());

    eval_files(&mut rng, &reference[..unique_ref], &mut files)?;
    Ok(Demo { files, planted })
}

const SWAPS: &[(&str, &str)] = &[
    ("urges", "invites"),
    ("residents", "inhabitants"),
    ("has ordered", "ordered"),
    ("precautionary", "preventive"),
    ("intense precipitation", "heavy rains"),
    ("hamlets", "villages"),
    ("until further notice", "until new communication"),
    ("advises", "recommends"),
];

fn degrade(rng: &mut ChaCha8Rng, en: &str, strength: usize) -> String {
    let mut out = en.to_string();
    for _ in 0..strength {
        let (a, b) = SWAPS.choose(rng).unwrap();
        out = out.replacen(a, b, 1);
    }
    if strength > 2 {
        let words: Vec<&str> = out.split(' ').collect();
        let drop = rng.random_range(1..words.len() - 1);
        out = words.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, w)| *w).collect::<Vec<_>>().join(" ");
    }
    out
}

fn eval_files(rng: &mut ChaCha8Rng, reference: &[Segment], files: &mut BTreeMap<String, Vec<u8>>) -> CliResult<()> {
    let segs = &reference[..20];
    let mut src = String::new();
    let mut refs = String::new();
    let mut hyp = String::new();
    for s in segs {
        src.push_str(&s.source_text);
        src.push('\n');
        refs.push_str(&s.target_text);
        refs.push('\n');
        hyp.push_str(&degrade(rng, &s.target_text, 2));
        hyp.push('\n');
    }
    files.insert("eval/src.txt".into(), src.into_bytes());
    files.insert("eval/ref.txt".into(), refs.into_bytes());
    files.insert("eval/hyp.txt".into(), hyp.into_bytes());

    let errors: &[(&str, &str, &str)] = &[
        ("Accuracy", "Mistranslation", "major"),
        ("Accuracy", "Omission", "minor"),
        ("Fluency", "Spelling", "minor"),
        ("Style", "AwkwardStyle", "minor"),
        ("Terminology", "WrongTerm", "major"),
        ("LocaleConventions", "TimeFormat", "minor"),
        ("Accuracy", "Omission", "critical"),
    ];
    let mut mqm = String::new();
    for (system, base_errors, base_da) in [("baseline", 3usize, 62.0f64), ("finetuned", 1, 81.0)] {
        for s in segs {
            let n = rng.random_range(0..=base_errors);
            let mut annotations = Vec::new();
            for annotator in ["ann1", "ann2"] {
                for k in 0..n {
                    let e = if system == "baseline" {
                        errors[(k + s.id.len() + rng.random_range(0..errors.len())) % errors.len()]
                    } else {
                        errors[k % 4]
                    };
                    annotations.push(json!({
                        "segment_id": s.id,
                        "category": e.0,
                        "subtype": e.1,
                        "severity": e.2,
                        "annotator": annotator,
                    }));
                }
            }
            let da = (base_da + rng.random_range(-12.0..12.0) - 4.0 * n as f64).clamp(0.0, 100.0);
            let line = json!({
                "segment_id": s.id,
                "system": system,
                "da_score": (da * 10.0).round() / 10.0,
                "annotations": annotations,
            });
            mqm.push_str(&serde_json::to_string(&line).map_err(data)?);
            mqm.push('\n');
        }
    }
    files.insert("eval/mqm.jsonl".into(), mqm.into_bytes());
    Ok(())
}

/// Writes the fixture under `dir`.
pub fn write_demo(dir: &Path) -> CliResult<Demo> {
    let demo = build()?;
    for (name, bytes) in &demo.files {
        write_artifact(&dir.join(name), bytes)?;
    }
    Ok(demo)
}

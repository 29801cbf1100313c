#include <string>
#include <unordered_set>
#include <vector>

#include "crisis/common.hpp"
#include "crisis/lingfeat.hpp"

// Built-in lexicon and rule annotators for English, Spanish and Italian.
// They are deliberately small: deterministic, dependency-free, and good
// enough to give the downstream classifier a usable signal. Any other
// language reports failure so callers can substitute neutral values.

namespace crisis {

namespace {

using Set = std::unordered_set<std::string>;

bool in(const Set& s, const std::string& t) { return s.count(t) != 0; }

bool supported_language(const std::string& lang) {
    return lang == "en" || lang == "es" || lang == "it";
}

// --- sentiment ------------------------------------------------------------

const Set kPositiveEn = {
    "safe",  "rescued",   "recovered", "relief",   "support", "hope",
    "hopeful", "strong",  "survived",  "saved",    "thank",   "thanks",
    "good",  "great",     "love",      "amazing",  "happy",   "glad",
    "beautiful", "wonderful", "best",  "calm",     "stable",  "fine",
    "well",  "better",    "brave",     "heroes",   "hero",    "solidarity",
    "donate", "donations", "volunteers", "ok",     "okay"};

const Set kNegativeEn = {
    "dead",      "death",    "died",      "killed",   "injured",  "hurt",
    "damage",    "damaged",  "destroyed", "collapsed", "fear",    "afraid",
    "scared",    "terrible", "horrible",  "awful",    "bad",      "worst",
    "crisis",    "emergency", "danger",   "dangerous", "trapped", "missing",
    "lost",      "victims",  "victim",    "panic",    "pain",     "sad",
    "tragic",    "tragedy",  "devastating", "devastated", "broken", "warning",
    "threat",    "severe",   "disaster",  "chaos",    "evacuated", "evacuation"};

const Set kPositiveEs = {
    "seguro",   "segura",   "rescatado", "rescatados", "ayuda",   "alivio",
    "apoyo",    "esperanza", "fuerte",   "sobrevivio", "salvado", "salvados",
    "gracias",  "bueno",    "buena",     "bien",       "mejor",   "feliz",
    "alegre",   "hermoso",  "maravilloso", "amor",     "tranquilo", "calma",
    "valiente", "heroes",   "solidaridad", "voluntarios", "donaciones"};

const Set kNegativeEs = {
    "muerto",   "muertos",  "muerte",   "murio",     "heridos",   "herido",
    "dano",     "danos",    "daño",     "daños",     "dañado",    "destruido",
    "derrumbe", "colapso",  "miedo",    "asustado",  "terrible",  "horrible",
    "malo",     "mala",     "peor",     "crisis",    "emergencia", "peligro",
    "peligroso", "atrapados", "atrapado", "desaparecidos", "perdido", "victimas",
    "víctimas", "panico",   "pánico",   "dolor",     "triste",    "tragico",
    "trágico",  "tragedia", "devastador", "devastado", "roto",    "alerta",
    "amenaza",  "grave",    "desastre", "caos",      "evacuados"};

const Set kPositiveIt = {
    "sicuro",  "sicura",   "salvato",  "salvati",   "aiuto",    "sollievo",
    "sostegno", "speranza", "forte",   "sopravvissuto", "grazie", "buono",
    "buona",   "bene",     "meglio",   "felice",    "bello",    "bella",
    "meraviglioso", "amore", "tranquillo", "calma", "coraggio", "eroi",
    "solidarieta", "solidarietà", "volontari", "donazioni"};

const Set kNegativeIt = {
    "morto",   "morti",    "morte",    "ucciso",    "feriti",   "ferito",
    "danno",   "danni",    "danneggiato", "distrutto", "crollo", "crollato",
    "paura",   "spaventato", "terribile", "orribile", "cattivo", "peggio",
    "crisi",   "emergenza", "pericolo", "pericoloso", "intrappolati",
    "dispersi", "perso",   "vittime",  "panico",    "dolore",   "triste",
    "tragico", "tragedia", "devastante", "devastato", "rotto",  "allerta",
    "minaccia", "grave",   "disastro", "caos",      "evacuati", "sfollati"};

const Set& positive_for(const std::string& lang) {
    if (lang == "es") return kPositiveEs;
    if (lang == "it") return kPositiveIt;
    return kPositiveEn;
}

const Set& negative_for(const std::string& lang) {
    if (lang == "es") return kNegativeEs;
    if (lang == "it") return kNegativeIt;
    return kNegativeEn;
}

// --- stopwords and pronouns -----------------------------------------------

const std::vector<std::string> kStopEn = {
    "the", "a",    "an",   "and",  "or",   "but",  "if",   "of",   "in",
    "on",  "at",   "by",   "with", "from", "to",   "for",  "about", "as",
    "is",  "are",  "was",  "were", "be",   "been", "being", "it",  "its",
    "this", "that", "these", "those", "there", "here", "he", "she", "they",
    "we",  "you",  "i",    "me",   "my",   "your", "his",  "her",  "their",
    "our", "not",  "no",   "do",   "does", "did",  "have", "has",  "had",
    "will", "would", "can", "could", "should", "than", "then", "so", "very",
    "just", "now", "up",   "down", "out",  "over", "under", "again", "more",
    "most", "some", "such", "only", "own",  "same", "too"};

const std::vector<std::string> kStopEs = {
    "el",  "la",   "los",  "las",  "un",   "una",  "unos", "unas", "y",
    "e",   "o",    "u",    "pero", "si",   "de",   "del",  "en",   "a",
    "al",  "por",  "para", "con",  "sin",  "sobre", "entre", "hacia",
    "desde", "hasta", "es", "son",  "era",  "eran", "ser",  "esta", "estan",
    "está", "están", "estar", "fue", "fueron", "hay", "ha",  "han",  "lo",
    "le",  "les",  "se",   "su",   "sus",  "este", "esta", "estos", "estas",
    "ese", "esa",  "esos", "esas", "que",  "como", "mas",  "más",  "menos",
    "muy", "ya",   "tambien", "también", "todo", "toda", "todos", "todas",
    "nada", "nos", "no",   "mi",   "mis",  "tu",   "tus",  "yo"};

const std::vector<std::string> kStopIt = {
    "il",  "lo",   "la",   "i",    "gli",  "le",   "un",   "uno",  "una",
    "e",   "ed",   "o",    "ma",   "se",   "di",   "del",  "della", "dei",
    "delle", "in", "nel",  "nella", "a",   "al",   "alla", "da",   "dal",
    "dalla", "con", "su",  "sul",  "sulla", "per", "tra",  "fra",  "è",
    "sono", "era", "erano", "essere", "sta", "stanno", "stare", "fu",
    "c'è", "ha",  "hanno", "ci",  "si",   "che",  "come", "più",  "piu",
    "meno", "molto", "gia", "già", "anche", "tutto", "tutti", "niente",
    "non", "mi",  "mio",  "mia",  "tuo",  "tua",  "suo",  "sua",  "noi",
    "voi", "io",  "questo", "questa", "questi", "queste", "quello", "quella"};

const std::vector<std::string> kPronEn = {
    "i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"};

const std::vector<std::string> kPronEs = {
    "yo", "me", "mi", "mis", "mio", "mío", "mia", "mía", "conmigo",
    "nosotros", "nosotras", "nos", "nuestro", "nuestra", "nuestros", "nuestras"};

const std::vector<std::string> kPronIt = {
    "io", "me", "mi", "mio", "mia", "miei", "mie", "noi", "ci",
    "nostro", "nostra", "nostri", "nostre"};

const std::vector<std::string> kEmptyList;

// --- NER gazetteers (shared across languages, lowercase keys) --------------

const Set kPersons = {
    "john",  "mary",   "james",  "maria", "jose",  "juan",   "pedro",
    "carlos", "ana",   "luis",   "giovanni", "luigi", "marco", "giulia",
    "francesca", "paolo", "antonio", "laura", "david", "sarah", "michael",
    "anna",  "luca",   "pablo",  "sofia", "elena", "diego",  "matteo",
    "chiara", "miguel", "lucia",  "lucía"};

const Set kLocations = {
    "chile",    "ecuador",  "italy",     "italia",   "spain",    "españa",
    "espana",   "mexico",   "méxico",    "texas",    "california", "oklahoma",
    "nepal",    "pakistan", "india",     "manila",   "philippines", "filipinas",
    "chennai",  "queensland", "alberta", "colorado", "boston",   "york",
    "london",   "londres",  "paris",     "roma",     "rome",     "milan",
    "milano",   "genova",   "genoa",     "napoli",   "naples",   "madrid",
    "barcelona", "santiago", "quito",    "guayaquil", "lima",    "bogota",
    "bogotá",   "venice",   "venezia",   "florence", "firenze",  "sardinia",
    "sardegna", "emilia",   "toscana",   "tuscany",  "amatrice", "aquila",
    "l'aquila", "kathmandu", "islamabad", "karachi", "sindh",    "punjab",
    "cebu",     "tacloban", "davao",     "leyte",    "bohol",    "iquique",
    "valparaiso", "valparaíso", "concepcion", "concepción", "coquimbo",
    "pedernales", "manabi", "manabí",    "portoviejo", "esmeraldas", "usa",
    "europe",   "europa",   "america"};

const Set kOrganizations = {
    "fema",   "unicef", "nasa",  "un",     "onu",    "redcross", "cruzroja",
    "nato",   "otan",   "who",   "oms",    "cdc",    "usgs",     "ingv",
    "noaa",   "ndma",   "pdma",  "efe",    "reuters", "bbc",     "cnn",
    "rai",    "televisa", "unesco", "wfp",  "oxfam",  "caritas",
    "protezione", "unhcr", "ngo"};

// --- POS lexicons -----------------------------------------------------------

const Set kDetEn = {"the", "a", "an", "this", "that", "these", "those", "some",
                    "any", "each", "every", "no", "another", "all", "both"};
const Set kPronPosEn = {
    "i",    "you",  "he",   "she",  "it",   "we",    "they", "me",   "him",
    "her",  "us",   "them", "my",   "your", "his",   "its",  "our",  "their",
    "mine", "yours", "who", "whom", "what", "which", "someone", "everyone",
    "anybody", "nothing", "myself", "yourself", "himself", "herself",
    "ourselves", "themselves"};
const Set kAdpEn = {"of",    "in",     "on",     "at",      "by",     "with",
                    "from",  "to",     "for",    "about",   "over",   "under",
                    "into",  "onto",   "through", "during", "before", "after",
                    "between", "against", "near", "without", "within", "along",
                    "across", "off",   "around"};
const Set kConjEn = {"and", "or", "but", "nor", "so", "yet", "because",
                     "although", "though", "while", "if", "unless", "since",
                     "whereas"};
const Set kPartEn = {"not", "n't"};
const Set kNumEn = {"one", "two", "three", "four", "five", "six", "seven",
                    "eight", "nine", "ten", "hundred", "thousand", "million"};
const Set kAdvEn = {"very",  "really", "too",   "also",  "here",   "there",
                    "now",   "then",   "soon",  "again", "still",  "already",
                    "just",  "never",  "always", "often", "quickly", "slowly",
                    "today", "tonight", "yesterday", "tomorrow", "maybe",
                    "perhaps", "away", "back"};
const Set kVerbEn = {
    "is",    "are",   "was",   "were",  "be",     "been",  "being", "am",
    "have",  "has",   "had",   "do",    "does",   "did",   "will",  "would",
    "can",   "could", "should", "may",  "might",  "must",  "go",    "goes",
    "went",  "get",   "gets",  "got",   "say",    "says",  "said",  "see",
    "saw",   "seen",  "know",  "need",  "needs",  "make",  "makes", "made",
    "take",  "took",  "come",  "came",  "look",   "looks", "want",  "wants",
    "report", "hit",  "hits",  "strike", "struck", "kill", "kills", "destroy",
    "collapse", "evacuate", "rescue", "burn",     "burns", "shake", "shook",
    "feel",  "felt",  "pray",  "stay",  "stays",  "remain", "remains", "help",
    "helps"};
const Set kAdjEn = {
    "big",   "small",  "large", "huge",   "massive", "strong", "weak",
    "new",   "old",    "good",  "bad",    "great",   "terrible", "horrible",
    "severe", "major", "minor", "many",   "few",     "several", "safe",
    "dangerous", "dead", "heavy", "deep", "high",    "low",     "hot",
    "cold",  "red",    "black", "white",  "serious", "critical"};

const Set kDetEs = {"el",   "la",   "los",  "las",  "un",    "una",  "unos",
                    "unas", "este", "esta", "estos", "estas", "ese",  "esa",
                    "esos", "esas", "aquel", "aquella", "mi", "mis",  "tu",
                    "tus",  "su",   "sus",  "nuestro", "nuestra", "nuestros",
                    "nuestras", "todo", "toda", "todos", "todas", "cada",
                    "algun", "algún", "alguna", "ningun", "ningún", "lo"};
const Set kPronPosEs = {
    "yo",   "tu",   "tú",   "el",   "él",   "ella",  "usted", "nosotros",
    "nosotras", "ellos", "ellas", "ustedes", "me",   "te",    "se",   "nos",
    "os",   "le",   "les",  "quien", "quién", "algo", "alguien", "nada",
    "nadie", "esto", "eso",  "aquello", "mio", "mío", "tuyo",  "suya",
    "conmigo"};
const Set kAdpEs = {"de",    "del",   "en",    "a",     "al",     "por",
                    "para",  "con",   "sin",   "sobre", "entre",  "hacia",
                    "desde", "hasta", "tras",  "contra", "durante", "ante",
                    "bajo",  "segun", "según"};
const Set kConjEs = {"y", "e", "o", "u", "ni", "pero", "sino", "porque",
                     "aunque", "si", "como", "cuando", "mientras", "pues"};
const Set kPartEs = {"no"};
const Set kNumEs = {"uno", "dos", "tres", "cuatro", "cinco", "seis", "siete",
                    "ocho", "nueve", "diez", "cien", "ciento", "mil",
                    "millon", "millón", "millones"};
const Set kAdvEs = {"muy",   "mas",   "más",   "menos", "tambien", "también",
                    "ya",    "ahora", "hoy",   "ayer",  "mañana",  "manana",
                    "aqui",  "aquí",  "ahi",   "ahí",   "alli",    "allí",
                    "bien",  "mal",   "pronto", "luego", "siempre", "nunca",
                    "casi",  "solo",  "sólo",  "todavia", "todavía", "aun",
                    "aún",   "despues", "después", "antes", "cerca", "lejos"};
const Set kVerbEs = {
    "es",     "son",    "era",    "eran",   "fue",    "fueron", "ser",
    "esta",   "está",   "estan",  "están",  "estaba", "estaban", "estar",
    "hay",    "habia",  "había",  "ha",     "han",    "he",     "hemos",
    "tiene",  "tienen", "tenia",  "tenía",  "va",     "van",    "iba",
    "ir",     "hace",   "hacen",  "hizo",   "hacer",  "dice",   "dicen",
    "dijo",   "decir",  "puede",  "pueden", "pudo",   "poder",  "debe",
    "deben",  "quiere", "quieren", "sabe",  "saben",  "ve",     "ven",
    "vio",    "ayudar", "ayudan", "ayudo",  "ayudó",  "necesita", "necesitan",
    "murio",  "murió",  "murieron", "mato", "mató",   "cayo",   "cayó",
    "cayeron", "temblo", "tembló", "colapso", "colapsó", "destruyo",
    "destruyó", "evacuar", "evacuaron", "rescataron", "quema", "quemo",
    "quemó",  "informa", "informan", "reporta", "reportan", "siente",
    "sienten", "sintio", "sintió", "busca", "buscan", "llega",  "llegan",
    "llego",  "llegó",  "sale",   "salen",  "salio",  "salió"};
const Set kAdjEs = {
    "grande", "grandes", "pequeño", "pequeno", "pequeña", "fuerte", "fuertes",
    "nuevo",  "nueva",   "viejo",   "bueno",   "buena",   "malo",   "mala",
    "grave",  "graves",  "severo",  "severa",  "mayor",   "menor",  "muchos",
    "muchas", "pocos",   "pocas",   "varios",  "varias",  "seguro", "segura",
    "peligroso", "peligrosa", "muerto", "herido", "herida", "pesado", "alto",
    "alta",   "roto",    "rota"};

const Set kDetIt = {"il",   "lo",   "la",    "i",     "gli",   "le",    "un",
                    "uno",  "una",  "questo", "questa", "questi", "queste",
                    "quel", "quello", "quella", "quelli", "quelle", "ogni",
                    "tutto", "tutta", "tutti", "tutte", "qualche", "alcuni",
                    "alcune", "nessun", "nessuna"};
const Set kPronPosIt = {
    "io",  "tu",  "lui", "lei", "noi", "voi", "loro", "mi",  "ti",  "si",
    "ci",  "vi",  "me",  "te",  "li",  "ne",  "chi",  "qualcosa", "qualcuno",
    "niente", "nessuno", "mio", "mia", "miei", "mie", "tuo", "tua", "suo",
    "sua", "nostro", "nostra"};
const Set kAdpIt = {"di",    "a",     "da",    "in",    "con",   "su",
                    "per",   "tra",   "fra",   "del",   "della", "dei",
                    "delle", "dal",   "dalla", "nel",   "nella", "nei",
                    "nelle", "sul",   "sulla", "al",    "alla",  "ai",
                    "alle",  "senza", "sopra", "sotto", "durante", "contro",
                    "verso", "presso"};
const Set kConjIt = {"e", "ed", "o", "oppure", "ma", "però", "pero", "perché",
                     "perche", "se", "quando", "mentre", "poiché", "dunque",
                     "quindi", "né", "ne"};
const Set kPartIt = {"non", "ecco"};
const Set kNumIt = {"due", "tre", "quattro", "cinque", "sei", "sette", "otto",
                    "nove", "dieci", "cento", "mille", "milioni"};
const Set kAdvIt = {"molto", "più",  "piu",  "meno",  "anche", "già",  "gia",
                    "ora",   "adesso", "oggi", "ieri", "domani", "qui", "qua",
                    "lì",    "li",   "là",   "bene",  "male",  "presto", "poi",
                    "sempre", "mai", "quasi", "solo", "ancora", "prima",
                    "vicino", "lontano", "dentro", "fuori"};
const Set kVerbIt = {
    "è",      "sono",   "era",    "erano",  "fu",      "furono", "essere",
    "sta",    "stanno", "stava",  "stavano", "stare",  "ha",     "hanno",
    "aveva",  "avevano", "ho",    "abbiamo", "avere",  "va",     "vanno",
    "andava", "andare", "fa",     "fanno",  "fece",    "fare",   "dice",
    "dicono", "disse",  "dire",   "può",    "puo",     "possono", "poteva",
    "deve",   "devono", "vuole",  "vogliono", "sa",    "sanno",  "vede",
    "vedono", "vide",   "aiuta",  "aiutano", "serve",  "servono", "morì",
    "mori",   "morirono", "uccise", "cadde", "caddero", "tremò", "tremo",
    "crollò", "crollo", "crollarono", "distrusse", "evacuare", "evacuarono",
    "soccorrono", "brucia", "bruciò", "brucio", "informa", "riporta",
    "riportano", "sente", "sentono", "sentì", "senti",  "cerca",  "cercano",
    "arriva", "arrivano", "arrivò", "arrivo", "esce",   "escono", "uscì",
    "usci",   "c'è",    "c'era"};
const Set kAdjIt = {
    "grande", "grandi", "piccolo", "piccola", "forte",  "forti",  "nuovo",
    "nuova",  "vecchio", "buono",  "buona",   "cattivo", "grave", "gravi",
    "severo", "maggiore", "minore", "molti",  "molte",   "pochi", "poche",
    "vari",   "varie",  "sicuro",  "sicura",  "pericoloso", "pericolosa",
    "morto",  "morta",  "ferito",  "ferita",  "pesante", "alto",  "alta",
    "basso",  "rotto",  "rotta",   "diversi", "diverse"};

struct PosLexicon {
    const Set* det;
    const Set* pron;
    const Set* adp;
    const Set* conj;
    const Set* part;
    const Set* num;
    const Set* adv;
    const Set* verb;
    const Set* adj;
    std::vector<std::string> adv_suffixes;
    std::vector<std::string> verb_suffixes;
    std::vector<std::string> adj_suffixes;
};

const PosLexicon& pos_lexicon(const std::string& lang) {
    static const PosLexicon en{&kDetEn, &kPronPosEn, &kAdpEn, &kConjEn,
                               &kPartEn, &kNumEn, &kAdvEn, &kVerbEn, &kAdjEn,
                               {"ly"},
                               {"ing", "ed"},
                               {"ous", "ful", "ive", "able", "ible"}};
    static const PosLexicon es{&kDetEs, &kPronPosEs, &kAdpEs, &kConjEs,
                               &kPartEs, &kNumEs, &kAdvEs, &kVerbEs, &kAdjEs,
                               {"mente"},
                               {"ando", "iendo", "aron", "ieron", "aba", "aban"},
                               {"oso", "osa", "ivo", "iva", "able", "ible"}};
    static const PosLexicon it{&kDetIt, &kPronPosIt, &kAdpIt, &kConjIt,
                               &kPartIt, &kNumIt, &kAdvIt, &kVerbIt, &kAdjIt,
                               {"mente"},
                               {"ando", "endo", "arono", "erono", "irono", "ava",
                                "avano"},
                               {"oso", "osa", "osi", "ose", "ivo", "iva", "bile",
                                "bili"}};
    if (lang == "es") return es;
    if (lang == "it") return it;
    return en;
}

bool ends_with_any(const std::string& token, const std::vector<std::string>& sufs,
                   std::size_t min_stem) {
    for (const std::string& s : sufs) {
        if (token.size() >= s.size() + min_stem &&
            token.compare(token.size() - s.size(), s.size(), s) == 0) {
            return true;
        }
    }
    return false;
}

bool token_is_numeric(const std::string& token) {
    bool saw_digit = false;
    for (char c : token) {
        if (c >= '0' && c <= '9') {
            saw_digit = true;
        } else if (c != '.' && c != ',') {
            return false;
        }
    }
    return saw_digit && !token.empty();
}

// --- NER helpers ------------------------------------------------------------

bool is_upper_letter(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return true;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return true;
    return false;
}

bool is_lower_letter(char32_t cp) {
    if (cp >= U'a' && cp <= U'z') return true;
    if (cp >= 0x00DF && cp <= 0x024F && cp != 0x00F7) return true;
    return false;
}

bool starts_with_ci_str(const std::string& s, const char* lit) {
    for (std::size_t i = 0; lit[i] != '\0'; ++i) {
        if (i >= s.size()) return false;
        char c = s[i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
        if (c != lit[i]) return false;
    }
    return true;
}

bool looks_like_url(const std::string& t) {
    return starts_with_ci_str(t, "http://") || starts_with_ci_str(t, "https://") ||
           starts_with_ci_str(t, "www.");
}

}  // namespace

const std::vector<std::string>& stopwords_for(const std::string& language) {
    if (language == "en") return kStopEn;
    if (language == "es") return kStopEs;
    if (language == "it") return kStopIt;
    return kEmptyList;
}

const std::vector<std::string>& first_person_pronouns_for(const std::string& language) {
    if (language == "en") return kPronEn;
    if (language == "es") return kPronEs;
    if (language == "it") return kPronIt;
    return kEmptyList;
}

const AnnotatorBundle& default_annotators() {
    static const AnnotatorBundle bundle = [] {
        AnnotatorBundle b;

        b.sentiment = [](const std::string& text,
                         const std::string& lang) -> std::optional<SentimentResult> {
            if (!supported_language(lang)) return std::nullopt;
            const Set& pos = positive_for(lang);
            const Set& neg = negative_for(lang);
            SentimentResult r;
            for (const std::string& t : tokenize(text, TokenNorm::Placeholdered).tokens) {
                if (in(pos, t)) ++r.positive_count;
                if (in(neg, t)) ++r.negative_count;
            }
            int total = r.positive_count + r.negative_count;
            r.polarity = total == 0 ? 0.0
                                    : static_cast<double>(r.positive_count -
                                                          r.negative_count) /
                                          static_cast<double>(total);
            return r;
        };

        b.ner = [](const std::string& text,
                   const std::string& lang) -> std::optional<NerCounts> {
            if (!supported_language(lang)) return std::nullopt;
            NerCounts counts;
            std::vector<std::string> tokens = tokenize(text, TokenNorm::Raw).tokens;
            bool sentence_start = true;
            std::size_t start = 0;
            if (!tokens.empty()) {
                std::string first = to_lower_ascii(tokens[0]);
                if (first == "rt") start = 1;  // retweet marker, not a word
            }
            for (std::size_t idx = start; idx < tokens.size(); ++idx) {
                const std::string& t = tokens[idx];
                if (is_punct_token(t)) {
                    if (t == "." || t == "!" || t == "?" || t == "…") {
                        sentence_start = true;
                    }
                    continue;
                }
                // Tweet decoration neither matches nor ends a sentence.
                if (t[0] == '@' || t[0] == '#' || looks_like_url(t)) continue;

                std::u32string cps = utf8_decode(t);
                bool capitalized = !cps.empty() && is_upper_letter(cps[0]);
                std::string lower = utf8_lower(t);
                if (capitalized && in(kPersons, lower)) {
                    ++counts.person;
                    ++counts.total;
                } else if (capitalized && in(kLocations, lower)) {
                    ++counts.location;
                    ++counts.total;
                } else if (capitalized && in(kOrganizations, lower)) {
                    ++counts.organization;
                    ++counts.total;
                } else if (capitalized && !sentence_start) {
                    bool has_lower = false;
                    for (char32_t cp : cps) {
                        if (is_lower_letter(cp)) has_lower = true;
                    }
                    if (has_lower) ++counts.total;  // capitalized but unknown kind
                }
                sentence_start = false;
            }
            return counts;
        };

        b.pos = [](const std::string& text,
                   const std::string& lang) -> std::optional<PosCounts> {
            if (!supported_language(lang)) return std::nullopt;
            const PosLexicon& lex = pos_lexicon(lang);
            PosCounts counts{};
            for (const std::string& t : tokenize(text, TokenNorm::Placeholdered).tokens) {
                PosTag tag;
                if (is_punct_token(t)) {
                    tag = kPunct;
                } else if (t == "<url>" || t == "<user>" || t[0] == '#' || t[0] == '@') {
                    tag = kX;
                } else if (token_is_numeric(t) || in(*lex.num, t)) {
                    tag = kNum;
                } else if (in(*lex.det, t)) {
                    tag = kDet;
                } else if (in(*lex.pron, t)) {
                    tag = kPron;
                } else if (in(*lex.adp, t)) {
                    tag = kAdp;
                } else if (in(*lex.conj, t)) {
                    tag = kConj;
                } else if (in(*lex.part, t)) {
                    tag = kPart;
                } else if (in(*lex.adv, t)) {
                    tag = kAdv;
                } else if (in(*lex.verb, t)) {
                    tag = kVerb;
                } else if (in(*lex.adj, t)) {
                    tag = kAdj;
                } else if (ends_with_any(t, lex.adv_suffixes, 3)) {
                    tag = kAdv;
                } else if (ends_with_any(t, lex.verb_suffixes, 2)) {
                    tag = kVerb;
                } else if (ends_with_any(t, lex.adj_suffixes, 2)) {
                    tag = kAdj;
                } else {
                    tag = kNoun;
                }
                ++counts[tag];
            }
            return counts;
        };

        return b;
    }();
    return bundle;
}

}  // namespace crisis

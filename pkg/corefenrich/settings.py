# Defaults shared by the parsers, the enrichment heuristics and the reports.
# Every value can be overridden by passing a different dict/set to the
# corresponding config object.

TAG_OPEN = "<b_crf>"
TAG_CLOSE = "<e_crf>"

# "less than 4 tokens", applied after cleaning
MAX_HEAD_TOKENS = 3
EXCLUDED_PRONOUNS = frozenset({"i"})
ARTICLES = frozenset({"a", "an", "the"})
GENITIVE_MARKERS = frozenset({"'s", "’s", "s'"})

MIN_CHAIN_SIZE = 2

# "explicit": use the head given in the data, computing it only when absent.
# "computed": always use the first nominal mention of the chain.
HEAD_RULES = ("explicit", "computed")
HEAD_RULE = "explicit"

# 0-based column indices, negative values count from the end of the row.
CONLL_COLUMNS = {"word": 3, "pos": 4, "coref": -1}
PRONOUN_POS_TAGS = frozenset({"PRP", "PRP$", "WP", "WP$", "PPER", "PPOSAT", "PDS"})

# Maps model fields onto MMAX2 attribute names. ParCorFull-style exports name
# these differently from project to project, so the table is user editable.
MMAX_ATTRIBUTES = {
    "chain": "coref_class",
    "category": "mention_type",
    "function": "cohesive_function",
    "pronoun_type": "pronoun_type",
    "modifier": "np_modifier",
    "gender": "gender",
    "number": "number",
    "animacy": "animacy",
    # attribute on <word> elements holding a sentence id
    "sentence": "sentence",
}
# coref_class values marking a markable that belongs to no chain
MMAX_EMPTY_CLASSES = frozenset({"", "empty", "none"})

# Raw annotation values accepted for each closed vocabulary. Lookups are done
# on the lowercased value, anything not listed maps to the field's fallback.
VOCABULARY_ALIASES = {
    "gender": {
        "male": "male",
        "masculine": "male",
        "m": "male",
        "female": "female",
        "feminine": "female",
        "f": "female",
        "neutral": "neutral",
        "neuter": "neutral",
        "n": "neutral",
        "unknown": "unknown",
    },
    "number": {
        "singular": "singular",
        "sg": "singular",
        "plural": "plural",
        "pl": "plural",
        "unknown": "unknown",
    },
    "animacy": {
        "animate": "animate",
        "inanimate": "inanimate",
        "unknown": "unknown",
    },
    "category": {
        "pronoun": "pronoun",
        "pronominal": "pronoun",
        "pron": "pronoun",
        "np": "nominal_phrase",
        "nominal": "nominal_phrase",
        "nominal_phrase": "nominal_phrase",
        "noun_phrase": "nominal_phrase",
        "proper": "proper_name",
        "proper_name": "proper_name",
        "pn": "proper_name",
        "ne": "proper_name",
        "vp": "verb_phrase",
        "verb_phrase": "verb_phrase",
        "clause": "clause",
    },
    "function": {
        "antecedent": "antecedent",
        "anaphoric": "anaphoric",
        "anaphor": "anaphoric",
        "cataphoric": "cataphoric",
        "comparative": "comparative",
        "substitution": "substitution",
        "ellipsis": "ellipsis",
        "apposition": "apposition",
    },
    "pronoun_type": {
        "personal": "personal",
        "possessive": "possessive",
        "demonstrative": "demonstrative",
        "reflexive": "reflexive",
        "relative": "relative",
    },
    "modifier": {
        "possessive": "possessive",
        "demonstrative": "demonstrative",
        "definite": "definite_article",
        "definite_article": "definite_article",
        "none": "none",
    },
}

# Predefined (closed) error categories first, then the categories added by
# annotators during annotation.
CLOSED_ERROR_CATEGORIES = ("gender", "number", "case", "ambiguous")
OPEN_ERROR_CATEGORIES = (
    "wrong_named_entity",
    "wrong_word",
    "missing_word",
    "wrong_syntactic_structure",
    "spelling_error",
    "addressee_reference",
)
ERROR_CATEGORIES = CLOSED_ERROR_CATEGORIES + OPEN_ERROR_CATEGORIES

ERROR_RECORD_COLUMNS = ("doc_id", "system", "mention_id", "correct", "category")
TRUE_VALUES = frozenset({"true", "1", "yes", "y", "t"})
FALSE_VALUES = frozenset({"false", "0", "no", "n", "f"})

BLEU_MAX_ORDER = 4
SMOOTHING_METHODS = ("none", "add_one")

# decimal places at report emission
STATS_DECIMALS = 1
RATE_DECIMALS = 1
FRACTION_DECIMALS = 2
BLEU_DECIMALS = 2

REPORT_FORMATS = ("tsv", "json")
AGGREGATIONS = ("micro", "macro")

JSONL_SCHEMA_VERSION = "1"
THREADS_ENV_VAR = "COREFENRICH_THREADS"

# stdout output is held in memory up to this size, then spills to a temporary file
STDOUT_SPOOL_BYTES = 64 * 1024 * 1024

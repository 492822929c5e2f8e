"""Shipped default configuration: pipeline parameters, seed terms, subreddit lists.

The numeric defaults and the seed/subreddit lists reproduce the collection
setup of the original study this toolkit re-implements. The headline corpus
sizes from that study are kept here as historical reference values; they are
not reproducible without the full multi-month dumps and a live model.
"""

from __future__ import annotations

# Keyword extraction pipeline
MAX_CHUNK_TOKENS = 3000
TOP_N_KEYWORDS = 200
SCORE_MIN = 0.0
SCORE_MAX = 5.0
MAX_KEYWORD_TOKENS = 3
PAGE_FILTER_WORDS = 100
PER_SEED_SEARCH_LIMIT = 40

# Dump ingest
SKIP_RATIO_THRESHOLD = 0.01
SKIP_RATIO_MIN_LINES = 1000

# Analytics
TOP_SUBREDDITS_N = 20

# Environment variable names for secrets (never stored in config files)
SALT_ENV_VAR = "REDLEX_SALT"
API_KEY_ENV_VAR = "REDLEX_API_KEY"

# Seed terms for the three shipped lexicons. Kept verbatim from the original
# collection runs, including the original spelling of the last P seed.
MAIN_TOPIC = "Israel-Hamas war"
MAIN_SEED_TERMS = (
    "Israel–Hamas war",
    "Israel",
    "Hamas",
    "Palestinian",
    "Gaza",
)

ZIONISM_TOPIC = "Zionism and antisemitism"
ZIONISM_SEED_TERMS = ("Zionism", "antisemitism")

PALESTINE_TOPIC = "Free Palestine and Islamophobia"
PALESTINE_SEED_TERMS = ("Free Palestine", "islamophibia")

SEED_PRESETS = {
    "main": {"topic": MAIN_TOPIC, "seed_terms": MAIN_SEED_TERMS},
    "zionism": {"topic": ZIONISM_TOPIC, "seed_terms": ZIONISM_SEED_TERMS},
    "palestine": {"topic": PALESTINE_TOPIC, "seed_terms": PALESTINE_SEED_TERMS},
}

# The 25 communities collected wholesale.
CENTRIC_SUBREDDITS = (
    "Palestine",
    "IsraelPalestine",
    "AskMiddleEast",
    "IsraelHamasWar",
    "islam",
    "israelexposed",
    "exmuslim",
    "Jewish",
    "Judaism",
    "IsraelCrimes",
    "Palestinian_Violence",
    "AntiSemitismInReddit",
    "IsraelWarVideoReport",
    "IsraelUnderAttack",
    "Israel_Palestine",
    "IsraelICYMI",
    "IsraelWar",
    "IsrealPalestineWar_23",
    "MuslimLounge",
    "Muslim",
    "Gaza",
    "MuslimCorner",
    "IsraelVsHamas",
    "Israel",
    "PalestinianvsIsrael",
)

# The 75 communities from which only keyword-matched submissions are kept.
# "Judaism" appears in both published lists; load_default_subreddit_config()
# resolves the overlap in favor of the centric list.
INCLUSIVE_SUBREDDITS = (
    "AutoNewspaper",
    "worldnews",
    "news",
    "brasilnoticias",
    "AskReddit",
    "Destiny",
    "2ndYomKippurWar",
    "CombatFootage",
    "DisneyNewsfeed",
    "TrendingQuickTVnews",
    "Conservative",
    "BreakingNews24hr",
    "conspiracy",
    "EndlessWar",
    "PublicFreakout",
    "politics",
    "NoStupidQuestions",
    "SeenOnNews_longtail",
    "NBCauto",
    "raceplay",
    "FreeKarma4You",
    "europe",
    "NoFilterNews",
    "worldnewsvideo",
    "TheDeprogram",
    "Mexico_Videos",
    "dirtyr4r",
    "FRANCE24auto",
    "Ernesto_it",
    "honestheadlinenews",
    "conservatives",
    "N_N_N",
    "Judaism",
    "socialism",
    "Hasan_Piker",
    "TrendsNewsWorld",
    "NewsWhatever",
    "ItaliaBox",
    "VaushV",
    "theworldnews",
    "TopMindsOfReddit",
    "TIMESINDIAauto",
    "NonCredibleDefense",
    "rustjob",
    "CNNauto",
    "explainlikeimfive",
    "NewsOfTheStupid",
    "ReactJSJobs",
    "anime_titties",
    "therewasanattempt",
    "ukpolitics",
    "lebanon",
    "ALJAZEERAauto",
    "NYTauto",
    "BBCauto",
    "golangjob",
    "TWTauto",
    "geopolitics",
    "h3h3productions",
    "redscarepod",
    "GUARDIANauto",
    "TheMajorityReport",
    "worldpolitics2",
    "FOXauto",
    "war",
    "NewIran",
    "LabourUK",
    "canada",
    "JavaScriptJob",
    "telaviv",
    "Britain",
    "india",
    "neoliberal",
    "chomsky",
    "infomoney",
)

# Reference numbers from the original collection runs (not desk-reproducible).
HISTORICAL_REFERENCE = {
    "pages_retrieved": 120,
    "pages_after_filter": 50,
    "keywords_ranked": 200,
    "keywords_after_filter": 174,
    "corpus": {"submissions": 412_258, "comments": 8_089_095},
    "zionism_subset": {"submissions": 126_107, "comments": 2_516_114},
    "palestine_subset": {"submissions": 75_625, "comments": 1_408_967},
}

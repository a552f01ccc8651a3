"""Recorded per-problem outcomes from a prior 11-problem evaluation campaign
(5 runs per problem per framework). Used as fixtures for the aggregation and
statistics tooling; the baseline frameworks enter only as recorded data."""

PROBLEM_CATEGORIES: dict[str, str] = {
    "salary_analyzer": "integration",
    "patient_risk_analyzer": "integration",
    "student_gpa_calculator": "integration",
    "inventory_low_stock_alert": "integration",
    "matrix_eigenvalue": "compositional",
    "portfolio_risk": "compositional",
    "iot_sensor_pipeline": "compositional",
    "movie_api": "data_processing",
    "book_recommender": "data_processing",
    "performance_tracker": "data_processing",
    "friend_suggester": "data_processing",
}

RUNS_PER_PROBLEM = 5

# Successes out of 5 runs, per framework.
RECORDED_SUCCESSES: dict[str, dict[str, int]] = {
    "toolforge": {
        "salary_analyzer": 4,
        "patient_risk_analyzer": 5,
        "student_gpa_calculator": 5,
        "inventory_low_stock_alert": 4,
        "matrix_eigenvalue": 4,
        "portfolio_risk": 5,
        "iot_sensor_pipeline": 5,
        "movie_api": 4,
        "book_recommender": 5,
        "performance_tracker": 5,
        "friend_suggester": 5,
    },
    "agentcoder": {name: 0 for name in PROBLEM_CATEGORIES},
    "autogen": {
        "salary_analyzer": 0,
        "patient_risk_analyzer": 0,
        "student_gpa_calculator": 0,
        "inventory_low_stock_alert": 0,
        "matrix_eigenvalue": 1,
        "portfolio_risk": 5,
        "iot_sensor_pipeline": 5,
        "movie_api": 0,
        "book_recommender": 0,
        "performance_tracker": 3,
        "friend_suggester": 3,
    },
    "metagpt": {
        "salary_analyzer": 2,
        "patient_risk_analyzer": 0,
        "student_gpa_calculator": 5,
        "inventory_low_stock_alert": 3,
        "matrix_eigenvalue": 0,
        "portfolio_risk": 4,
        "iot_sensor_pipeline": 1,
        "movie_api": 0,
        "book_recommender": 0,
        "performance_tracker": 0,
        "friend_suggester": 0,
    },
}


def proportions(framework: str) -> list[float]:
    """Per-problem success proportions in the canonical problem order."""
    counts = RECORDED_SUCCESSES[framework]
    return [counts[name] / RUNS_PER_PROBLEM for name in PROBLEM_CATEGORIES]

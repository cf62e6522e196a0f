"""Константы и значения по умолчанию для расчётов FHD."""

# Физические параметры модели (в примерах все равны 1)
PARAM_NAMES = (
    "rho",
    "kappa",
    "eta",
    "zeta",
    "mu0",
    "sigma",
    "eta_prime",
    "lambda_prime",
    "tau",
    "chi0",
)
DEFAULT_PARAM_VALUE = 1.0

# Квазиньютоновские итерации на шаге по времени
DEFAULT_SWEEPS = 2
STRICT_TOL = 1e-10
STRICT_MAX_SWEEPS = 50

# Линейные решатели
SOLVER_METHODS = {"direct", "iterative"}
DEFAULT_SOLVER_METHOD = "direct"
DEFAULT_SOLVER_TOL = 1e-10
DEFAULT_MAX_ITER = 2000

# Степени точности квадратур
NONLINEAR_QUAD_DEGREE = 6
ERROR_QUAD_DEGREE = 8
# Моменты интерполяции (потоки, циркуляции, средние)
INTERPOLATION_QUAD_DEGREE = 8
# Размер блока ячеек при векторизованной сборке
CELL_CHUNK = 512

# Эксперименты
MODES = {"converge", "energy", "run"}
EXAMPLES = {1, 2, 3}
# Постановки примеров, хранимые одновременно (пример x параметры)
PROBLEM_CACHE_SIZE = 8
DEFAULT_K = {"converge": [4, 8, 16], "energy": [16], "run": [8]}
DEFAULT_FINAL_TIME = {1: 1.0, 2: 2.0, 3: 1.0}
DEFAULT_DT_RULE = "1/K"
ENERGY_DT_RULES = ["1/16", "1/32", "1/64"]
DEFAULT_OUT_DIR = "results"

# Столбцы таблицы ошибок в порядке отчёта сходимости
ERROR_COLUMNS = (
    "u_l2",
    "u_h1",
    "p_l2",
    "m_l2",
    "div_m",
    "H_l2",
    "div_H",
    "z_l2",
    "k_l2",
    "w_l2",
    "w_h1",
    "phi_l2",
)

# Форматирование чисел в CSV
FLOAT_DIGITS = 6
SCIENTIFIC_BELOW = 1e-3

# Имена файлов результатов (без расширения)
CONVERGE_FILE = "converge_example{example}"
ENERGY_FILE = "energy_example{example}_K{K}_dt{dt}"
RUN_FILE = "run_example{example}_K{K}"
ENERGY_COLUMNS = ("n", "t", "E", "F")

# Допуски проверки энергетического неравенства
ENERGY_SLACK = 1e-8

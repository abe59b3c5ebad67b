"""
Configurações dos experimentos de recuperação de fatores latentes.
"""

from typing import Any, Dict, List, Optional

from firing.errors import ConfigError

EXPERIMENTS = (
    "spn-single",
    "spn-estimator",
    "spn-joint",
    "sparse-single",
    "sparse-delta",
    "check-props",
)

DEFAULT_DELTAS = (0.0, 0.01, 0.05, 0.1)

# Valores por experimento usados quando o campo não foi informado.
EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "spn-single": {"n": 200, "k": 20, "p_N": 0.3, "p_s": 1.0, "T": 500, "p": 1, "q": 1},
    "spn-estimator": {"n": 1000, "k": 50, "p_N": 0.3, "p_s": 0.5, "T": 200, "auto_pq": True},
    "spn-joint": {"n": 200, "k": 20, "p_N": 0.6, "p_s": 1.0, "i_pre": 5, "T": 500, "auto_pq": True},
    "sparse-single": {"n": 200, "K": 10, "p_g": 0.3, "p_s": 1.0, "T": 1000, "p": 1, "q": 1},
    "sparse-delta": {
        "n": 200, "K": 10, "p_g": 0.3, "p_s": 1.0, "i_pre": 5, "rank": 4, "T": 500,
        "auto_pq": True,
    },
    "check-props": {},
}

_INT_FIELDS = {
    "n", "k", "K", "i_pre", "T", "T_max", "p", "q", "reps", "seed",
    "trace_every", "batch_size", "workers", "eval_steps", "omega_draws", "rank",
}
_FLOAT_FIELDS = {"p_f", "p_N", "p_g", "p_s"}
_BOOL_FIELDS = {"auto_pq"}
_STR_FIELDS = {"experiment", "out"}
_ALIASES = {"p_n": "p_N", "t": "T", "t_max": "T_max"}


def parse_delta_list(text: str) -> List[float]:
    """Lê uma lista de δ separada por vírgulas."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"lista de delta inválida: {text!r}")


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "sim", "on"):
        return True
    if lowered in ("0", "false", "no", "nao", "não", "off"):
        return False
    raise ConfigError(f"valor booleano inválido: {value!r}")


class ExperimentConfig:
    """
    Classe que armazena as configurações de um experimento.

    Campos com valor None ainda não foram decididos; `resolved()` os preenche
    com os padrões do experimento escolhido.
    """

    FIELDS = (
        "experiment", "n", "k", "K", "p_f", "p_N", "p_g", "p_s", "i_pre",
        "T", "T_max", "p", "q", "auto_pq", "reps", "seed", "out",
        "trace_every", "delta_list", "batch_size", "workers", "eval_steps",
        "omega_draws", "rank",
    )

    def __init__(
        self,
        experiment="spn-single",
        n=None,
        k=None,
        K=None,
        p_f=0.3,
        p_N=None,
        p_g=None,
        p_s=None,
        i_pre=None,
        T=None,
        T_max=None,
        p=None,
        q=None,
        auto_pq=None,
        reps=10,
        seed=42,
        out="results",
        trace_every=10,
        delta_list=None,
        batch_size=64,
        workers=1,
        eval_steps=10 ** 4,
        omega_draws=1000,
        rank=None,
    ):
        """
        Inicializa a configuração com os parâmetros fornecidos.

        Args:
            experiment: Um de EXPERIMENTS
            n: Número de bits da grade
            k: Tamanho de G(f) no modelo sinal mais ruído
            K: Número de fatores da grade esparsa
            p_f: Probabilidade de ativação de cada fator
            p_N: Probabilidade de ruído por bit (sinal mais ruído)
            p_g: Probabilidade de ligação fator-bit (grade esparsa)
            p_s: Probabilidade de admissão na amostragem
            i_pre: Número de bits pré-selecionados (0 para o grafo simples)
            T: Orçamento de atualizações por aresta
            T_max: Limite de tiques da drenagem (padrão 20·T)
            p, q: Magnitudes do feedback negativo e positivo
            auto_pq: Escolhe (p, q) e N a partir das fórmulas de pureza
            reps: Número de repetições
            seed: Semente mestra
            out: Diretório de saída
            trace_every: Intervalo de tiques entre linhas do traço (0 desliga)
            delta_list: Valores de δ do experimento sparse-delta
            batch_size: Tiques propagados por bloco
            workers: Threads para as repetições
            eval_steps: Instantes usados na avaliação do estimador
            omega_draws: Amostras usadas para estimar ω̂ do conjunto pré-selecionado
            rank: Posto de pureza dos bits pré-selecionados na grade esparsa
        """
        self.experiment = experiment
        self.n = n
        self.k = k
        self.K = K
        self.p_f = p_f
        self.p_N = p_N
        self.p_g = p_g
        self.p_s = p_s
        self.i_pre = i_pre
        self.T = T
        self.T_max = T_max
        self.p = p
        self.q = q
        self.auto_pq = auto_pq
        self.reps = reps
        self.seed = seed
        self.out = out
        self.trace_every = trace_every
        self.delta_list = None if delta_list is None else [float(d) for d in delta_list]
        self.batch_size = batch_size
        self.workers = workers
        self.eval_steps = eval_steps
        self.omega_draws = omega_draws
        self.rank = rank

    @property
    def is_sparse(self) -> bool:
        return self.experiment.startswith("sparse")

    def as_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.FIELDS}

    def header(self) -> Dict[str, Any]:
        """Pares (chave, valor) gravados no cabeçalho dos arquivos de saída."""
        values = self.as_dict()
        if values["delta_list"] is not None:
            values["delta_list"] = ",".join(repr(d) for d in values["delta_list"])
        values.pop("out")
        values.pop("workers")
        return values

    def update(self, **overrides) -> "ExperimentConfig":
        """Nova configuração com os campos dados; None significa 'não informado'."""
        values = self.as_dict()
        for key, value in overrides.items():
            if key not in values:
                raise ConfigError(f"campo desconhecido: {key}")
            if value is not None:
                values[key] = value
        return ExperimentConfig(**values)

    def resolved(self) -> "ExperimentConfig":
        """Preenche os campos não informados com os padrões do experimento."""
        if self.experiment not in EXPERIMENT_DEFAULTS:
            raise ConfigError(f"experimento desconhecido: {self.experiment}")
        values = self.as_dict()
        for key, value in EXPERIMENT_DEFAULTS[self.experiment].items():
            if values[key] is None:
                values[key] = value
        if values["i_pre"] is None:
            values["i_pre"] = 0
        if values["auto_pq"] is None:
            values["auto_pq"] = values["p"] is None or values["q"] is None
        if self.experiment == "sparse-delta" and values["delta_list"] is None:
            values["delta_list"] = list(DEFAULT_DELTAS)
        return ExperimentConfig(**values)

    def validate(self) -> "ExperimentConfig":
        """
        Verifica a configuração já resolvida.

        Raises:
            ConfigError: campo ausente ou fora do domínio.
        """
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experimento desconhecido: {self.experiment}")
        if self.reps is None or self.reps < 1:
            raise ConfigError("reps deve ser >= 1")
        if self.seed is None or self.seed < 0:
            raise ConfigError("seed deve ser >= 0")
        if self.experiment == "check-props":
            return self
        required = ["n", "p_f", "p_s", "T"]
        required += ["K", "p_g"] if self.is_sparse else ["k", "p_N"]
        for name in required:
            if getattr(self, name) is None:
                raise ConfigError(f"campo obrigatório ausente para {self.experiment}: {name}")
        probabilities = {"p_f": self.p_f, "p_N": self.p_N, "p_g": self.p_g}
        for name, value in probabilities.items():
            if value is not None and not 0.0 < value < 1.0:
                raise ConfigError(f"{name} deve estar em (0, 1), recebido {value}")
        if not 0.0 < self.p_s <= 1.0:
            raise ConfigError(f"p_s deve estar em (0, 1], recebido {self.p_s}")
        if self.n < 1:
            raise ConfigError("n deve ser >= 1")
        if not self.is_sparse and not 1 <= self.k <= self.n:
            raise ConfigError(f"k={self.k} fora de [1, n={self.n}]")
        if self.is_sparse and self.K < 1:
            raise ConfigError("K deve ser >= 1")
        if self.T < 1:
            raise ConfigError("T deve ser >= 1")
        if self.T_max is not None and self.T_max < self.T:
            raise ConfigError(f"T_max={self.T_max} < T={self.T}")
        if not self.auto_pq and (self.p is None or self.q is None):
            raise ConfigError("informe p e q ou use auto_pq")
        for name in ("p", "q"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} deve ser >= 1")
        if self.i_pre < 0:
            raise ConfigError("i_pre deve ser >= 0")
        if self.experiment in ("spn-joint", "sparse-delta") and self.i_pre < 1:
            raise ConfigError(f"{self.experiment} exige i_pre >= 1")
        if not self.is_sparse and self.i_pre > self.k:
            raise ConfigError(f"i_pre={self.i_pre} > k={self.k}")
        if self.trace_every < 0:
            raise ConfigError("trace_every deve ser >= 0")
        for name in ("batch_size", "workers", "eval_steps", "omega_draws"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} deve ser >= 1")
        if self.delta_list is not None and any(d < 0 for d in self.delta_list):
            raise ConfigError("valores de delta devem ser >= 0")
        return self

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        """Lê um arquivo `chave=valor` (linhas iniciadas por # são comentários)."""
        values: Dict[str, Any] = {}
        try:
            with open(path, encoding="utf-8") as handle:
                lines = handle.readlines()
        except OSError as e:
            raise ConfigError(f"não foi possível ler {path}: {e}")
        for number, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: esperado chave=valor")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            key = _ALIASES.get(key, key)
            values[key] = cls._parse_value(key, value, f"{path}:{number}")
        return cls().update(**values)

    @staticmethod
    def _parse_value(key: str, value: str, where: str) -> Any:
        try:
            if key in _INT_FIELDS:
                return int(value)
            if key in _FLOAT_FIELDS:
                return float(value)
        except ValueError:
            raise ConfigError(f"{where}: valor inválido para {key}: {value!r}")
        if key in _BOOL_FIELDS:
            return _parse_bool(value)
        if key == "delta_list":
            return parse_delta_list(value)
        if key in _STR_FIELDS:
            return value
        raise ConfigError(f"{where}: campo desconhecido: {key}")

    def __str__(self):
        """
        Retorna uma representação em string da configuração.
        """
        lines = ["ExperimentConfig:"]
        for name, value in self.as_dict().items():
            if value is not None:
                lines.append(f"  {name}: {value}")
        return "\n".join(lines)

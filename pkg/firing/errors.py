"""
Exceções do pacote firing.
"""


class FiringError(Exception):
    """Erro base de todo o pacote."""


class DomainError(FiringError, ValueError):
    """Índice fora do domínio ou larguras incompatíveis."""


class ContractError(FiringError, ValueError):
    """Pré-condição de uma operação violada pelo chamador."""


class GraphError(ContractError):
    """Grafo de disparo mal construído (camadas, níveis ou d_max)."""


class UndefinedPurityError(FiringError, ArithmeticError):
    """Pureza indefinida: o coeficiente de recall (mu) é zero."""


class UndefinedPrecisionError(FiringError, ArithmeticError):
    """Precisão indefinida: taxa do fator nula ou estimador que nunca dispara."""


class SamplingTimeout(FiringError, TimeoutError):
    """A amostragem consumiu instantes demais sem encontrar o fator ativo."""


class InfeasibleTupleError(FiringError):
    """Nenhum par (p, q) satisfaz as restrições abaixo do limite de busca."""


class EstimatorFailure(FiringError):
    """Nenhuma entrada sobreviveu à drenagem: estimador impossível."""


class ConfigError(FiringError, ValueError):
    """Configuração de experimento inválida."""

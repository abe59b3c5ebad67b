#!/usr/bin/env python3
"""
Firing - Recuperação de fatores latentes com grafos de disparo amostrados

Este programa roda os experimentos de amostragem e drenagem sobre os modelos
sinal mais ruído e grade esparsa, gravando traços CSV e um resumo com a
configuração e a semente usadas.
"""

import argparse
import logging
import sys
import time
import traceback
from typing import List, Optional

from firing.config import EXPERIMENTS, ExperimentConfig, parse_delta_list
from firing.errors import ConfigError, FiringError
from firing.experiments import ExperimentResult, run


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description='Recuperação de fatores latentes com grafos de disparo amostrados'
    )

    parser.add_argument('--experiment', choices=EXPERIMENTS, default=None,
                        help='Experimento a rodar (default: spn-single)')
    parser.add_argument('--config', default=None,
                        help='Arquivo chave=valor; as flags têm precedência')

    model = parser.add_argument_group('modelo')
    model.add_argument('--n', type=int, help='Número de bits da grade')
    model.add_argument('--k', type=int, help='Tamanho de G(f) no sinal mais ruído')
    model.add_argument('--K', dest='K', type=int, help='Número de fatores na grade esparsa')
    model.add_argument('--p-f', dest='p_f', type=float, help='Probabilidade do fator (default: 0.3)')
    model.add_argument('--p-n', dest='p_N', type=float, help='Probabilidade de ruído por bit')
    model.add_argument('--p-g', dest='p_g', type=float, help='Probabilidade de ligação fator-bit')

    pipeline = parser.add_argument_group('amostragem e drenagem')
    pipeline.add_argument('--p-s', dest='p_s', type=float, help='Probabilidade de admissão')
    pipeline.add_argument('--i-pre', dest='i_pre', type=int, help='Bits pré-selecionados')
    pipeline.add_argument('--rank', type=int, help='Posto de pureza dos pré-selecionados')
    pipeline.add_argument('--t', dest='T', type=int, help='Orçamento de atualizações por aresta')
    pipeline.add_argument('--t-max', dest='T_max', type=int, help='Limite de tiques (default: 20·T)')
    pipeline.add_argument('--p', type=int, help='Feedback negativo')
    pipeline.add_argument('--q', type=int, help='Feedback positivo')
    pipeline.add_argument('--auto-pq', dest='auto_pq', action='store_true', default=None,
                          help='Escolhe (p, q) e N pelas fórmulas de pureza')
    pipeline.add_argument('--batch-size', dest='batch_size', type=int,
                          help='Tiques propagados por bloco (default: 64)')
    pipeline.add_argument('--delta-list', dest='delta_list', type=parse_delta_list,
                          help='Valores de delta separados por vírgula (sparse-delta)')
    pipeline.add_argument('--omega-draws', dest='omega_draws', type=int,
                          help='Amostras para estimar omega (default: 1000)')
    pipeline.add_argument('--eval-steps', dest='eval_steps', type=int,
                          help='Instantes na avaliação do estimador (default: 10000)')

    run_group = parser.add_argument_group('execução')
    run_group.add_argument('--reps', type=int, help='Número de repetições (default: 10)')
    run_group.add_argument('--seed', type=int, help='Semente mestra (default: 42)')
    run_group.add_argument('--out', help='Diretório de saída (default: results)')
    run_group.add_argument('--trace-every', dest='trace_every', type=int,
                           help='Tiques entre linhas do traço, 0 desliga (default: 10)')
    run_group.add_argument('--workers', type=int, help='Threads para as repetições (default: 1)')
    run_group.add_argument('--log-level', dest='log_level', default='WARNING',
                           choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                           help='Nível de log (default: WARNING)')

    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Configuração do arquivo (se houver) sobrescrita pelas flags informadas."""
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {
        name: getattr(args, name)
        for name in ExperimentConfig.FIELDS
        if hasattr(args, name)
    }
    return config.update(**overrides).resolved().validate()


def print_header():
    """Imprime o cabeçalho do programa"""
    print("=" * 60)
    print("RECUPERAÇÃO DE FATORES LATENTES COM GRAFOS DE DISPARO")
    print("=" * 60)
    print()


def print_config(config: ExperimentConfig):
    """Imprime as configurações do experimento"""
    print("Configurações:")
    print(config)
    print()


def print_error(error: Exception, start_time: float):
    """Imprime informações sobre um erro ocorrido"""
    print("=" * 50)
    print("ERRO DURANTE EXECUÇÃO")
    print("=" * 50)
    print()
    print(f"Erro: {str(error)}")
    print(f"Tempo de execução até o erro: {time.time() - start_time:.2f} segundos")


def print_results(result: ExperimentResult, start_time: float) -> None:
    """
    Imprime o resumo do experimento e os arquivos gravados.

    Args:
        result: Resultado devolvido por `firing.experiments.run`.
        start_time: Instante de início, para o tempo total.
    """
    print("\n" + "=" * 50)
    print("RESULTADOS")
    print("=" * 50)
    for key, value in result.summary:
        shown = f"{value:.4f}" if isinstance(value, float) else value
        print(f"  {key}: {shown}")
    print("\nArquivos gravados:")
    for path in result.files:
        print(f"  {path}")
    print(f"\nTempo de execução: {time.time() - start_time:.2f} segundos")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Função principal. Devolve 0 em caso de sucesso, 1 se o experimento (ou
    uma propriedade verificada) falhar e 2 para configuração inválida.
    """
    args = parse_arguments(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )
    start_time = time.time()
    try:
        config = build_config(args)
    except ConfigError as e:
        print_error(e, start_time)
        return 2

    print_header()
    print_config(config)
    print("Iniciando experimento...")

    try:
        result = run(config)
    except FiringError as e:
        print_error(e, start_time)
        return 1
    except Exception as e:
        print("\nERRO CRÍTICO durante execução do experimento:", str(e))
        print("Traceback:")
        traceback.print_exc()
        print()
        print_error(e, start_time)
        return 1

    print_results(result, start_time)
    return result.status


if __name__ == "__main__":
    sys.exit(main())

from commands import build, expansion, flow, frobenius, gauss, stats, verify

# subcommand name -> module exposing register(subparsers, parents) and run(config, manifest_name)
COMMANDS = {
    'build': build,
    'flow': flow,
    'frobenius': frobenius,
    'stats': stats,
    'gauss': gauss,
    'expansion': expansion,
    'verify': verify,
}

"""The ``yc-driver`` executable, meant for ``yc-bench run --model-cmd``.

Credentials travel only through the environment; ``--api-key-env`` names
the variable and nothing secret is ever printed or logged.
"""

import os

import click

from . import __version__
from .config import Pricing, ProviderConfig
from .providers import OpenAIChatProvider, ProviderError, StubProvider
from .serve import serve


@click.command()
@click.version_option(__version__, prog_name="yc-driver")
@click.option("--stub", "stub_path", default=None, metavar="PATH",
              help="Replay canned replies from PATH instead of calling a backend.")
@click.option("--model", default=None, help="Model identifier for the chat endpoint.")
@click.option("--base-url", default=None, metavar="URL",
              help="Chat endpoint root; falls back to $YC_DRIVER_BASE_URL.")
@click.option("--api-key-env", default="YC_DRIVER_API_KEY", show_default=True,
              metavar="NAME", help="Environment variable holding the API key.")
@click.option("--timeout", type=float, default=60.0, show_default=True,
              help="Per-request timeout in seconds.")
@click.option("--max-retries", type=int, default=2, show_default=True)
@click.option("--prompt-price", type=float, default=None,
              help="USD per 1K prompt tokens; with --completion-price enables cost telemetry.")
@click.option("--completion-price", type=float, default=None,
              help="USD per 1K completion tokens.")
def main(stub_path, model, base_url, api_key_env, timeout, max_retries,
         prompt_price, completion_price) -> None:
    """Answer turn envelopes on stdin with command batches on stdout."""
    if bool(stub_path) == bool(model):
        raise click.ClickException("pick exactly one of --stub, --model")
    secrets: tuple[str, ...] = ()
    if stub_path:
        try:
            provider = StubProvider(stub_path)
        except (OSError, ValueError, ProviderError) as exc:
            raise click.ClickException(str(exc)) from None
    else:
        url = base_url or os.environ.get("YC_DRIVER_BASE_URL", "")
        if not url:
            raise click.ClickException("need --base-url or $YC_DRIVER_BASE_URL")
        config = ProviderConfig(model=model, base_url=url, api_key_env=api_key_env,
                                timeout=timeout, max_retries=max_retries)
        provider = OpenAIChatProvider(config)
        secrets = (os.environ.get(api_key_env, ""),)
    pricing = None
    if prompt_price is not None and completion_price is not None:
        pricing = Pricing(prompt_per_1k=prompt_price, completion_per_1k=completion_price)
    serve(provider, pricing=pricing, secrets=secrets)


if __name__ == "__main__":
    main()

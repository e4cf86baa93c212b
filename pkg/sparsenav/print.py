"""Route print and logging output through tqdm so that progress bars stay intact"""
import inspect
import tqdm


__all__ = ['TqdmOut', 'install_print']


builtin_print = print


def flex_print(*args, **kwargs):
    try:
        tqdm.tqdm.write(' '.join(str(a) for a in args), file=kwargs.get('file'), end=kwargs.get('end', '\n'))
    except Exception:
        builtin_print(*args, **kwargs)


def install_print():
    """Replace the builtin print for every module; only the CLI entry calls this"""
    inspect.builtins.print = flex_print


class TqdmOut:
    """Stream for logging.StreamHandler that writes through tqdm"""
    @classmethod
    def write(cls, s, file=None, nolock=False):
        tqdm.tqdm.write(s, file=file, end='', nolock=nolock)

    @classmethod
    def flush(cls):
        pass

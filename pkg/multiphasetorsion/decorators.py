from typing import Optional


def command(name: Optional[str] = None, help: Optional[str] = None, **kwargs):
    """
    Mark a method as a subcommand.

    .. note::

        Should be used as a method decorator eg: `@command()`

    .. code-block:: python

        from multiphasetorsion.commands import CommandConsumer
        from multiphasetorsion.decorators import argument, command

        class MyCommands(CommandConsumer):

            @command(name="dtn-eigenvalue")
            @argument("--k", type=int, required=True)
            def eigenvalue(self, options):
                ...

    Methods decorated with `@command()` are called by
    :meth:`CommandConsumer.handle_command` when the command line names them.
    The subcommand name defaults to the method name with underscores replaced
    by dashes and the help text to the first line of the docstring.
    """

    def decorator(func):
        doc = (func.__doc__ or "").strip().splitlines()
        func.command = True
        func.kwargs = {
            "name": name or func.__name__.replace("_", "-"),
            "help": help or (doc[0] if doc else None),
            **kwargs,
        }
        func.arguments = list(getattr(func, "arguments", []))
        return func

    return decorator


def argument(*flags, **kwargs):
    """
    Declare an argparse argument of a `@command()` method. Arguments keep the
    order in which they are written.
    """

    def decorator(func):
        func.arguments = [(flags, kwargs)] + list(getattr(func, "arguments", []))
        return func

    return decorator

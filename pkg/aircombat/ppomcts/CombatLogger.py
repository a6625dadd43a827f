import logging

TRACE = 5
MSG = 25
logging.addLevelName(TRACE, 'TRACE')
logging.addLevelName(MSG, 'MSG')

class _BraceMessage(object):
    'Defers str.format() until a handler actually emits the record'

    __slots__ = ('fmt','args')

    def __init__(self,fmt,args):
        self.fmt = fmt
        self.args = args

    def __str__(self):
        if not self.args:
            return str(self.fmt)
        return str(self.fmt).format(*self.args)

class CombatLogger(object):
    '''
    Tagged logger with brace style arguments

    Usage mirrors the usual workbench logger, e.g.
        logger.debug('moving {} to {}', name, pos)

    Loggers form a tree through the `parent` argument. The tag of a child is
    appended to the parent name, so that verbosity can be tuned per area with
    the standard logging configuration.
    '''

    def __init__(self,tag,parent=None,title='ppomcts'):
        if parent is not None:
            name = parent.name + '.' + tag.split('.')[-1]
        else:
            name = tag
        self.name = name
        self.title = title
        self._logger = logging.getLogger(name)

    def isEnabledFor(self,level):
        return self._logger.isEnabledFor(level)

    def _log(self,level,msg,args,frame=0,exc_info=None):
        if not self._logger.isEnabledFor(level):
            return
        # +3 skips _log(), the level method and logging internals
        self._logger.log(level,_BraceMessage(msg,args),
                exc_info=exc_info,stacklevel=3+frame)

    def error(self,msg,*args,**kargs):
        self._log(logging.ERROR,msg,args,**kargs)

    def warn(self,msg,*args,**kargs):
        self._log(logging.WARNING,msg,args,**kargs)

    warning = warn

    def msg(self,msg,*args,**kargs):
        self._log(MSG,msg,args,**kargs)

    def info(self,msg,*args,**kargs):
        self._log(logging.INFO,msg,args,**kargs)

    def log(self,msg,*args,**kargs):
        self._log(logging.INFO,msg,args,**kargs)

    def debug(self,msg,*args,**kargs):
        self._log(logging.DEBUG,msg,args,**kargs)

    def trace(self,msg,*args,**kargs):
        self._log(TRACE,msg,args,**kargs)

    def _catch(self,level,msg,func,args,kargs):
        try:
            return func(*args,**kargs)
        except Exception as e:
            if msg:
                self._log(level,'{}: {}',(msg,e),
                        exc_info=self._logger.isEnabledFor(logging.DEBUG))
            else:
                self._log(level,'{}',(e,))

    def catch(self,msg,func,*args,**kargs):
        'Call func and log any exception as error, returning None on failure'
        return self._catch(logging.ERROR,msg,func,args,kargs)

    def catchWarn(self,msg,func,*args,**kargs):
        return self._catch(logging.WARNING,msg,func,args,kargs)


from collections import namedtuple
from .utils import proxylogger as logger

class PropertyInfo(object):
    'For holding information of a typed, documented and defaulted setting'

    def __init__(self,host,name,tp,doc='',enum=None,group='run',
            default=None):
        self.Name = name
        self.Type = tp
        self.Group = group
        self.Doc = doc
        self.Enum = enum
        self.Default = default
        self.Key = host.addPropertyInfo(self)

    def parse(self,text):
        'Convert the text form of a setting into its typed value'
        text = text.strip()
        if self.Type is bool:
            low = text.lower()
            if low in ('1','true','yes','on'):
                return True
            if low in ('0','false','no','off'):
                return False
            raise ValueError('expect boolean for "{}", got "{}"'.format(
                self.Name,text))
        value = self.Type(text)
        if self.Enum and value not in self.Enum:
            raise ValueError('"{}" must be one of {}, got "{}"'.format(
                self.Name,', '.join(self.Enum),text))
        return value

    def format(self,value):
        if self.Type is bool:
            return 'true' if value else 'false'
        if self.Type is float:
            return repr(float(value))
        return str(value)

class ProxyType(type):
    '''
    Meta class for managing registries of interchangeable implementation
    classes, e.g. action selectors or configuration profiles.

    A class using (a class derived from) this meta class is registered at
    definition time under its `_id` and getName(). Classes with negative `_id`
    are abstract bases and are not registered.
    '''

    Info = namedtuple('ProxyTypeInfo',
            ('Types','TypeMap','TypeNameMap','TypeNames','PropInfo'))

    @classmethod
    def getMetaName(mcs):
        return mcs.__name__

    @classmethod
    def getInfo(mcs):
        if '_info' not in mcs.__dict__:
            mcs._info = mcs.Info([],{},{},[],{})
        return mcs._info

    @classmethod
    def getType(mcs,tp):
        if isinstance(tp,str):
            try:
                return mcs.getInfo().TypeNameMap[tp]
            except KeyError:
                raise KeyError('unknown {} type "{}", expect one of {}'.format(
                    mcs.getMetaName(),tp,', '.join(mcs.getInfo().TypeNames)))
        return mcs.getInfo().TypeMap[tp]

    @classmethod
    def getTypeNames(mcs):
        return list(mcs.getInfo().TypeNames)

    @classmethod
    def create(mcs,tp,*args,**kargs):
        'Instantiate the registered class named or numbered by tp'
        cls = mcs.getType(tp)
        logger.trace('create {} "{}"',mcs.getMetaName(),cls.getName())
        return cls(*args,**kargs)

    def __init__(cls, name, bases, attrs):
        super(ProxyType,cls).__init__(name,bases,attrs)
        mcs = cls.__class__
        mcs.register(cls)

    @classmethod
    def register(mcs,cls):
        '''
        Register a class to this meta class

        To make the registration automatic at the class definition time, simply
        use six.with_metaclass() with ProxyType or its derived type.

        It is defined as a meta class method in order for you to call this
        method directly to register an unrelated class
        '''
        cls._idx = -1
        mcs.getInfo().Types.append(cls)
        if cls._id < 0:
            return
        info = mcs.getInfo()
        if cls._id in info.TypeMap:
            raise RuntimeError('Duplicate {} type id {}, {} conflict with '
                '{}'.format(mcs.getMetaName(),cls._id,cls.getName(),
                            info.TypeMap[cls._id].getName()))
        info.TypeMap[cls._id] = cls
        info.TypeNameMap[cls.getName()] = cls
        info.TypeNames.append(cls.getName())
        cls._idx = len(info.TypeNames)-1
        logger.trace('register {} "{}":{},{}',
            mcs.getMetaName(),cls.getName(),cls._id,cls._idx)

    @classmethod
    def addPropertyInfo(mcs,info):
        props = mcs.getInfo().PropInfo
        if info.Name in props:
            raise RuntimeError('Duplicate property "{}"'.format(info.Name))
        props[info.Name] = info
        return info.Name

    @classmethod
    def getPropertyInfo(mcs,key):
        return mcs.getInfo().PropInfo[key]

    @classmethod
    def getPropertyInfos(mcs):
        return list(mcs.getInfo().PropInfo.values())


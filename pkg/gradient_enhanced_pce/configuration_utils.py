# coding=utf-8
# Copyright 2019 The Gradient-Enhanced PCE Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
""" Configuration base class shared by every subcommand of the command line. """

from __future__ import (absolute_import, division, print_function,
                        unicode_literals)

import copy
import json
import logging
import os
from io import open

logger = logging.getLogger(__name__)


class RunConfig(object):
    r""" Base class for all run configurations.
        Handles the parameters common to every subcommand as well as methods for loading and saving configurations.

        A configuration is fully serializable: the dictionary returned by :meth:`to_dict` is embedded in every
        report, and :meth:`from_dict` on that dictionary rebuilds a configuration that reproduces the run.

        Parameters:
            ``seed``: integer, default `0`. Global seed; every random stream of the run is derived from it.
            ``out``: string, default `None`. Output directory; no file is written outside of it.
            ``verbosity``: integer, default `1`. 0 logs warnings only, 1 adds milestones, 2 adds debug output.
    """
    def __init__(self, **kwargs):
        self.seed = kwargs.pop('seed', 0)
        self.out = kwargs.pop('out', None)
        self.verbosity = kwargs.pop('verbosity', 1)
        if kwargs:
            raise ValueError("Unknown parameters for {}: {}".format(
                self.__class__.__name__, ', '.join(sorted(kwargs.keys()))))

    def update(self, **kwargs):
        """ Overrides attributes from `kwargs`; keys that are not attributes are returned untouched.
            ``None`` values are skipped so that unset command-line flags keep the current value.
        """
        unused = {}
        for key, value in kwargs.items():
            if not hasattr(self, key):
                unused[key] = value
            elif value is not None:
                setattr(self, key, value)
        return unused

    @classmethod
    def from_dict(cls, json_object):
        """Constructs a `RunConfig` from a Python dictionary of parameters."""
        config = cls()
        for key, value in json_object.items():
            config.__dict__[key] = value
        return config

    @classmethod
    def from_json_file(cls, json_file):
        """Constructs a `RunConfig` from a json file of parameters."""
        with open(json_file, "r", encoding='utf-8') as reader:
            text = reader.read()
        return cls.from_dict(json.loads(text))

    @staticmethod
    def read_flat_file(flat_file):
        """ Parses a flat ``key = value`` file into a dictionary.

            Blank lines and lines starting with ``#`` are ignored, dashes in keys become underscores and values are
            decoded as JSON literals when possible (``3``, ``0.5``, ``true``, ``[30, 50]``), otherwise kept as strings.
        """
        values = {}
        with open(flat_file, "r", encoding='utf-8') as reader:
            for line_number, line in enumerate(reader, 1):
                line = line.strip()
                if not line or line.startswith('#'):
                    continue
                if '=' not in line:
                    raise ValueError("{}:{}: expected 'key = value', got '{}'".format(flat_file, line_number, line))
                key, value = line.split('=', 1)
                key = key.strip().replace('-', '_')
                value = value.strip()
                try:
                    values[key] = json.loads(value)
                except ValueError:
                    values[key] = value
        return values

    @classmethod
    def from_flat_file(cls, flat_file, **kwargs):
        r""" Instantiate a configuration from a flat ``key = value`` file.

        Parameters:
            flat_file: path of the file; see :meth:`read_flat_file` for the accepted syntax.

            kwargs: (`optional`) dict: key/value pairs with which to update the configuration object after loading.

        Returns the configuration, or ``None`` after logging an error when the file cannot be read.
        Unknown keys are logged as warnings and ignored.
        """
        if not os.path.isfile(flat_file):
            logger.error("Configuration file '{}' was not found.".format(flat_file))
            return None
        logger.info("loading configuration file {}".format(flat_file))
        config = cls()
        unused = config.update(**cls.read_flat_file(flat_file))
        if unused:
            logger.warning("Ignoring unknown keys in {}: {}".format(flat_file, ', '.join(sorted(unused))))
        config.update(**kwargs)
        return config

    def __eq__(self, other):
        return self.__dict__ == other.__dict__

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return str(self.to_json_string())

    def to_dict(self):
        """Serializes this instance to a Python dictionary."""
        output = copy.deepcopy(self.__dict__)
        return output

    def to_json_string(self):
        """Serializes this instance to a JSON string."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_json_file(self, json_file_path):
        """ Save this instance to a json file."""
        with open(json_file_path, "w", encoding='utf-8') as writer:
            writer.write(self.to_json_string())

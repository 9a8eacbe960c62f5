# Empty file -- py.test uses this file to locate the project root.

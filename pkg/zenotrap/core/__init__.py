# zenotrap core package

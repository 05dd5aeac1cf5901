# zenotrap models package

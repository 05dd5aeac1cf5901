# zenotrap utils package

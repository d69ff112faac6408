# Model type and state enumeration tests
